"""Continuum limits estimated numerically: the variance constant sigma_D^2,
the mean-projection density d, and off-diagonal Green values.

Two independent routes to d are provided: reading it off a lattice Green
operator, and solving the Poisson problem -Lap d = Leb(D)/sigma_D^2 with
Dirichlet boundary data by finite differences (unit square only).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .domain import DomainSpec, LatticeDomain, build_lattice
from .errors import ParameterError
from .green import GreenOperator, green_column, green_row_sums


@dataclass
class ContinuumGrid:
    resolution: int
    points: np.ndarray  # (m, 2) continuum coordinates in D
    values: np.ndarray  # (m,)
    cell_area: float
    quantity: str  # "d-function" or "green-slice"
    sigma2: float | None = None

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def min_value(self) -> float:
        return float(self.values.min())


def sigma_D2(green: GreenOperator, domain: LatticeDomain) -> float:
    """Var(Y_N) = n^{-2} sum_{x,y} G(x,y), the finite-N variance constant."""
    if green.n != domain.n:
        raise ParameterError("green operator does not match domain")
    return green.total() / domain.n**2


def sigma_D2_sparse(domain: LatticeDomain) -> float:
    """Same constant from a single sparse solve; usable when the dense Green
    matrix would not fit."""
    return float(green_row_sums(domain).sum()) / domain.n**2


def d_function_green(domain: LatticeDomain, green: GreenOperator | None = None,
                     leb: float = 1.0) -> ContinuumGrid:
    """d read off the lattice: d_N(x) = n * rowsum_x(G) / total(G), placed at
    the continuum positions x/N.

    The atoms carry equal quadrature weight leb/n (the lattice points spread
    uniformly over D), so the normalization identity sum d_N = n makes the
    integral come out to leb exactly.
    """
    if green is not None:
        rs = green.row_sums()
    else:
        rs = green_row_sums(domain)
    total = rs.sum()
    values = domain.n * rs / total
    points = domain.vertices / domain.N
    sigma2 = float(total) / domain.n**2
    return ContinuumGrid(resolution=domain.N, points=points, values=values,
                         cell_area=leb / domain.n, quantity="d-function",
                         sigma2=sigma2)


def d_function_poisson(M: int, sigma2: float, shape: str = "unit-square") -> ContinuumGrid:
    """Finite-difference Dirichlet solution of -Lap d = Leb(D)/sigma_D^2 on
    the unit square, on the M x M interior grid with spacing 1/(M+1)."""
    if shape != "unit-square":
        raise ParameterError("poisson route is only supported on the unit square")
    if M < 2:
        raise ParameterError("M must be at least 2")
    if sigma2 <= 0:
        raise ParameterError("sigma2 must be positive")
    h = 1.0 / (M + 1)
    lap1 = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(M, M), format="csr")
    eye = sp.identity(M, format="csr")
    A = (sp.kron(lap1, eye) + sp.kron(eye, lap1)).tocsc() / h**2
    rhs = np.full(M * M, 1.0 / sigma2)
    u = spla.spsolve(A, rhs)
    ax = (np.arange(1, M + 1)) * h
    gx, gy = np.meshgrid(ax, ax, indexing="ij")
    points = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    return ContinuumGrid(resolution=M, points=points, values=u,
                         cell_area=h * h, quantity="d-function", sigma2=sigma2)


def poisson_residual(grid: ContinuumGrid) -> float:
    """Max deviation of the 5-point Laplacian of the solved grid from the
    constant -Leb(D)/sigma2, over interior nodes."""
    M = grid.resolution
    h = 1.0 / (M + 1)
    u = grid.values.reshape(M, M)
    lap = (u[:-2, 1:-1] + u[2:, 1:-1] + u[1:-1, :-2] + u[1:-1, 2:]
           - 4.0 * u[1:-1, 1:-1]) / h**2
    return float(np.abs(lap + 1.0 / grid.sigma2).max())


def grid_interpolate(grid: ContinuumGrid, points: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a poisson-route grid (zero outside)."""
    M = grid.resolution
    h = 1.0 / (M + 1)
    # pad with the zero boundary ring so interpolation is defined up to the edge
    u = np.zeros((M + 2, M + 2))
    u[1:-1, 1:-1] = grid.values.reshape(M, M)
    pts = np.asarray(points, dtype=float)
    fi = np.clip(pts[:, 0] / h, 0.0, M + 1 - 1e-12)
    fj = np.clip(pts[:, 1] / h, 0.0, M + 1 - 1e-12)
    i0 = fi.astype(int)
    j0 = fj.astype(int)
    di = fi - i0
    dj = fj - j0
    return ((1 - di) * (1 - dj) * u[i0, j0] + di * (1 - dj) * u[i0 + 1, j0]
            + (1 - di) * dj * u[i0, j0 + 1] + di * dj * u[i0 + 1, j0 + 1])


def d_route_difference(green_grid: ContinuumGrid, poisson_grid: ContinuumGrid) -> float:
    """Sup difference of the two d routes over the lattice positions.

    The lattice problem has its Dirichlet zero on the ring one cell inside
    the bounding square, i.e. on the square [1/N, 1-1/N]^2; that square is
    mapped affinely onto the unit square before interpolating the Poisson
    solution, since d is invariant under rescaling the domain.
    """
    N = green_grid.resolution
    u = (green_grid.points - 1.0 / N) / (1.0 - 2.0 / N)
    interp = grid_interpolate(poisson_grid, u)
    return float(np.abs(green_grid.values - interp).max())


_green_cache: dict[int, tuple[LatticeDomain, dict[int, np.ndarray]]] = {}


def continuum_green_estimate(x, y, N: int) -> float:
    """Green value G^{D_N}(floor(xN), floor(yN)) on the unit-square lattice,
    the convergent estimator of the continuum Green function at (x, y)."""
    xi = (math.floor(x[0] * N), math.floor(x[1] * N))
    yi = (math.floor(y[0] * N), math.floor(y[1] * N))
    if xi == yi:
        raise ParameterError("diagonal divergence: x and y map to the same site")
    if N not in _green_cache:
        _green_cache[N] = (build_lattice(DomainSpec(shape="unit-square"), N), {})
    domain, cols = _green_cache[N]
    for p in (xi, yi):
        if not domain.contains(p):
            raise ParameterError(f"point {p} is outside the lattice domain")
    a = domain.index_of(xi)
    b = domain.index_of(yi)
    if a not in cols:
        cols[a] = green_column(domain, a)
    return float(cols[a][b])


def export_grid_csv(grid: ContinuumGrid, path, metadata: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if metadata:
            fh.write(f"# {metadata}\n")
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for (px, py), v in zip(grid.points, grid.values):
            w.writerow([px, py, repr(float(v))])
