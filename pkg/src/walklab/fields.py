"""DGFF sampling, the zero-average decomposition and local covariance windows."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .domain import LatticeDomain
from .errors import ParameterError, SolverError
from .green import GreenOperator, PotentialKernelEvaluator
from .rng import stream

FIELD_SAMPLING_CAP = 5000


@dataclass
class FieldSample:
    values: np.ndarray
    seed: int
    Y: float  # spatial average
    zero_average: bool = False


def _cholesky(green: GreenOperator) -> np.ndarray:
    try:
        return np.linalg.cholesky(green.entries)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * np.trace(green.entries) / green.n
        try:
            return np.linalg.cholesky(green.entries + jitter * np.eye(green.n))
        except np.linalg.LinAlgError as exc:
            raise SolverError("covariance not positive definite even with jitter") from exc


def sample_dgff(green: GreenOperator, seed: int, count: int = 1) -> list[FieldSample]:
    """i.i.d. centered Gaussian fields with covariance G, via Cholesky.

    Replicates draw from independent streams keyed by (seed, replicate), so any
    prefix of a run is reproducible on its own.
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    if green.n > FIELD_SAMPLING_CAP:
        raise ParameterError(
            f"field sampling capped at {FIELD_SAMPLING_CAP} vertices (got {green.n})")
    L = _cholesky(green)
    out = []
    for r in range(count):
        z = stream(seed, "dgff", r).standard_normal(green.n)
        v = L @ z
        out.append(FieldSample(values=v, seed=seed, Y=float(v.mean())))
    return out


def zero_average_decompose(sample: FieldSample, green: GreenOperator,
                           domain: LatticeDomain) -> dict:
    """Split a field into its spatial average Y and an independent zero-mean part.

    The weight vector d(x) = n * rowsum_x(G) / total(G) sums to n, so
    subtracting d * Y kills the average exactly; the covariance of Y with each
    remaining coordinate vanishes identically.
    """
    rs = green.row_sums()
    d = domain.n * rs / green.total()
    Y = float(sample.values.mean())
    hat = sample.values - d * Y
    return {
        "Y": Y,
        "hat_field": FieldSample(values=hat, seed=sample.seed, Y=float(hat.mean()),
                                 zero_average=True),
        "dN": d,
    }


def cov_Y_hat(green: GreenOperator, domain: LatticeDomain) -> np.ndarray:
    """Algebraic covariance of the average Y with each zero-average coordinate."""
    rs = green.row_sums()
    d = domain.n * rs / green.total()
    var_y = green.total() / domain.n**2
    return rs / domain.n - d * var_y


@dataclass
class CovarianceWindow:
    radius: int
    kind: str  # "pinned" | "tilde"
    matrix: np.ndarray  # ((2r+1)^2, (2r+1)^2)
    offsets: np.ndarray  # ((2r+1)^2, 2)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())


def window_offsets(r: int) -> np.ndarray:
    g = np.arange(-r, r + 1)
    return np.array([(i, j) for j in g for i in g], dtype=np.int64)


def local_covariance(kind: str, r: int, evaluator: PotentialKernelEvaluator) -> CovarianceWindow:
    """Covariance matrix on the window |z|_inf <= r.

    pinned:  C(x,y) = a(x) + a(y) - a(x-y)
    tilde:   pinned minus (1/8) [1 - delta_{x,0} - delta_{y,0} + delta_{x,y}],
    the correction coming from the jump-time fluctuations of the embedded chain.
    """
    if r < 1:
        raise ParameterError("radius must be >= 1")
    if kind not in ("pinned", "tilde"):
        raise ParameterError(f"kind must be pinned or tilde, got {kind!r}")
    offs = window_offsets(r)
    m = len(offs)
    evaluator.prefill(2 * r)
    a = np.array([evaluator(z) for z in offs])
    C = np.empty((m, m))
    for p in range(m):
        for q in range(m):
            C[p, q] = a[p] + a[q] - evaluator(offs[p] - offs[q])
    if kind == "tilde":
        zero = np.all(offs == 0, axis=1).astype(float)
        eye = np.eye(m)
        C -= 0.125 * (1.0 - zero[:, None] - zero[None, :] + eye)
    return CovarianceWindow(radius=r, kind=kind, matrix=C, offsets=offs)


def verify_pinned_relation(r: int, evaluator: PotentialKernelEvaluator) -> dict:
    """Check tilde + correction == pinned entrywise, and that tilde is PSD."""
    pinned = local_covariance("pinned", r, evaluator)
    tilde = local_covariance("tilde", r, evaluator)
    offs = tilde.offsets
    zero = np.all(offs == 0, axis=1).astype(float)
    corr = 0.125 * (1.0 - zero[:, None] - zero[None, :] + np.eye(len(offs)))
    err = float(np.abs(tilde.matrix + corr - pinned.matrix).max())
    return {
        "max_identity_error": err,
        "min_eigenvalue": tilde.min_eigenvalue(),
    }


def export_samples_csv(samples: list[FieldSample], domain: LatticeDomain, path,
                       metadata: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if metadata:
            fh.write(f"# {metadata}\n")
        w = csv.writer(fh)
        w.writerow(["x_i", "x_j", "value", "replicate"])
        for r, s in enumerate(samples):
            for (i, j), v in zip(domain.vertices, s.values):
                w.writerow([int(i), int(j), repr(float(v)), r])
