"""Green operator of the walk killed at the boundary vertex, and the lattice potential kernel.

With the local time carrying a 1/deg weight, the Green matrix solves
(4 I - Adj) G = I on D_N, where Adj is the interior adjacency.  The potential
kernel is evaluated by midpoint quadrature of its Fourier representation
(1 - cos(k.x)) / (4 sin^2(k1/2) + 4 sin^2(k2/2)) over (-pi, pi)^2.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from .domain import LatticeDomain
from .errors import DomainTooLargeError, ParameterError, SolverError

DENSE_CAP = 20000
RESIDUAL_TOL = 1e-10


@dataclass
class GreenOperator:
    """Dense symmetric Green matrix in local-time units."""

    n: int
    entries: np.ndarray  # (n, n) float64

    def __getitem__(self, xy):
        return self.entries[xy]

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def total(self) -> float:
        return float(self.entries.sum())

    def symmetry_defect(self) -> float:
        return float(np.abs(self.entries - self.entries.T).max())

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(b"WLGREEN1")
            fh.write(struct.pack("<Q", self.n))
            fh.write(self.entries.astype("<f8").tobytes(order="C"))

    @classmethod
    def load(cls, path) -> "GreenOperator":
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != b"WLGREEN1":
                raise ValueError("not a Green file (bad magic)")
            (n,) = struct.unpack("<Q", fh.read(8))
            data = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n)
        return cls(n=int(n), entries=np.ascontiguousarray(data))


def _killed_laplacian(domain: LatticeDomain) -> sp.csc_matrix:
    return (sp.eye(domain.n, format="csc") * 4.0 - domain.interior_adjacency()).tocsc()


def compute_green(domain: LatticeDomain, cap: int = DENSE_CAP) -> GreenOperator:
    """Dense Green operator by sparse LU of the killed Laplacian."""
    n = domain.n
    if n > cap:
        raise DomainTooLargeError(f"domain too large for dense Green: {n} > cap {cap}")
    L = _killed_laplacian(domain)
    lu = spl.splu(L)
    G = lu.solve(np.eye(n))
    resid = float(np.abs(L @ G - np.eye(n)).max())
    if resid > RESIDUAL_TOL:
        raise SolverError(f"Green solve residual {resid:.3e} above tolerance", resid)
    return GreenOperator(n=n, entries=G)


def green_column(domain: LatticeDomain, x: int) -> np.ndarray:
    """Single column G(., x) without dense assembly; x is a vertex index."""
    e = np.zeros(domain.n)
    e[x] = 1.0
    return spl.spsolve(_killed_laplacian(domain), e)


def green_row_sums(domain: LatticeDomain) -> np.ndarray:
    """Row sums of G from one solve against the all-ones vector."""
    return spl.spsolve(_killed_laplacian(domain), np.ones(domain.n))


def system_residual(domain: LatticeDomain, green: GreenOperator) -> float:
    """Max residual of the defining relation (mean over neighbours minus value)."""
    L = _killed_laplacian(domain)
    return float(np.abs(L @ green.entries / 4.0 - np.eye(green.n) / 4.0).max())


@dataclass
class PotentialKernelEvaluator:
    """Cached midpoint-quadrature evaluator of the lattice potential kernel.

    The kernel vanishes at the origin, equals 1/4 at the neighbours of the
    origin and grows like log|x| / (2 pi).  Values are cached under the
    canonical representative of the lattice symmetry orbit, so all eight
    symmetries hold exactly.
    """

    M: int = 2048
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.M < 64:
            raise ParameterError("quadrature resolution M must be >= 64")

    def __call__(self, x) -> float:
        a, b = abs(int(x[0])), abs(int(x[1]))
        if a < b:
            a, b = b, a
        key = (a, b)
        if key not in self._cache:
            self._cache[key] = self._quadrature(a, b)
        return self._cache[key]

    def _quadrature(self, a: int, b: int) -> float:
        if a == 0 and b == 0:
            return 0.0
        h = 2.0 * np.pi / self.M
        k = -np.pi + (np.arange(self.M) + 0.5) * h  # midpoints never hit k = 0
        s2 = 4.0 * np.sin(k / 2.0) ** 2
        denom = s2[:, None] + s2[None, :]
        num = 1.0 - np.cos(a * k)[:, None] * np.cos(b * k)[None, :] \
            + np.sin(a * k)[:, None] * np.sin(b * k)[None, :]
        return float((num / denom).mean())

    def prefill(self, radius: int) -> None:
        for a in range(radius + 1):
            for b in range(a + 1):
                self(np.array([a, b]))


def potential_kernel(x, M: int = 2048) -> float:
    """One-off evaluation; prefer a shared PotentialKernelEvaluator for many points."""
    return PotentialKernelEvaluator(M=M)(x)


def kac_moments(green: GreenOperator, domain: LatticeDomain, x: int, t: float) -> dict:
    """Second moment of the hitting time of the boundary vertex, and the
    total-local-time fluctuation variance at boundary time t.

    second_moment_H_rho = 2 sum_{y,z} deg(y) deg(z) G(x,y) G(y,z)
    var_U = (2 t / n^2) sum_{x,y} G(x,y)
    """
    if t < 0:
        raise ParameterError("t must be >= 0")
    G = green.entries
    deg = np.full(green.n, 4.0)
    w = deg * G[x, :]  # deg(y) G(x,y)
    inner = G @ deg  # sum_z G(y,z) deg(z)
    second = 2.0 * float(w @ inner)
    var_u = 2.0 * t / domain.n**2 * green.total()
    return {"second_moment_H_rho": second, "var_U_N": var_u}
