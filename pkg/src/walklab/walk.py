"""Walk simulation in three time parametrizations, and the couplings built on it.

Modes: "discrete" counts chain steps, "continuous" attaches unit-rate
exponential holding times to every vertex, "boundary" runs the continuous
walk until the local time at the fused boundary vertex reaches the horizon.
All local times carry the 1/deg weight.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from . import _kernels
from .domain import LatticeDomain
from .errors import ParameterError
from .fields import sample_dgff
from .green import GreenOperator
from .rng import kernel_seed

MODES = {"discrete": _kernels.MODE_DISCRETE,
         "continuous": _kernels.MODE_CONTINUOUS,
         "boundary": _kernels.MODE_BOUNDARY}

COVER_CAP = 10**10


@dataclass(frozen=True)
class WalkConfig:
    start: int | str  # vertex index or "boundary"
    mode: str
    horizon: float  # steps, total time, or boundary local time, per mode
    seed: int
    replicate: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {sorted(MODES)}")
        if self.horizon < 0:
            raise ParameterError("horizon must be >= 0")


@dataclass
class LocalTimeField:
    values: np.ndarray  # (n+1,) local times over D_N plus rho at index n
    mode: str
    horizon: float
    final_position: int
    steps: int
    elapsed_time: float

    def interior(self) -> np.ndarray:
        return self.values[:-1]


@dataclass
class FluctuationRecord:
    U: float
    T: float
    t_circ: float
    tau_rho: float
    flagged: bool = False


def steps_for_time(domain: LatticeDomain, t: float) -> int:
    """Discrete horizon for a total time t, in units of the degree sum."""
    return int(math.floor(t * domain.deg_total))


def _start_index(domain: LatticeDomain, start) -> int:
    if isinstance(start, str):
        if start != "boundary":
            raise ParameterError("start must be a vertex index or 'boundary'")
        return domain.n
    return int(start)


def run_walk(domain: LatticeDomain, config: WalkConfig,
             green: GreenOperator | None = None) -> LocalTimeField:
    """Simulate one walk and return its local-time field."""
    if domain.deg_rho == 0:
        raise ParameterError("boundary vertex has zero degree")
    indptr, indices = domain.walk_graph()
    n = domain.n
    # purpose is mode-independent: runs in different modes with the same seed
    # and replicate share the jump chain, which the couplings rely on
    seed = kernel_seed(config.seed, "walk", config.replicate)
    counts, times, steps, elapsed, final = _kernels.walk_core(
        indptr, indices, n, domain.deg_rho, _start_index(domain, config.start),
        MODES[config.mode], float(config.horizon), seed)
    deg = np.full(n + 1, 4.0)
    deg[n] = float(domain.deg_rho)
    if config.mode == "discrete":
        values = counts / deg
    else:
        values = times / deg
    return LocalTimeField(values=values, mode=config.mode, horizon=config.horizon,
                          final_position=int(final), steps=int(steps),
                          elapsed_time=float(elapsed))


def fluctuations(field: LocalTimeField, domain: LatticeDomain, t: float) -> FluctuationRecord:
    """Total-local-time fluctuation U, its normalization T = U / sqrt(2t), and
    the shifted horizon used for time conversion."""
    if field.mode != "boundary":
        raise ParameterError("fluctuations need a boundary-mode field")
    U = float((field.interior() - t).mean())
    flagged = False
    if t <= 0:
        T = 0.0
        flagged = U != 0.0
    else:
        T = U / math.sqrt(2.0 * t)
    ratio = domain.deg_rho / domain.deg_total
    t_circ = t - (1.0 - ratio) * math.sqrt(2.0 * t) * T if t > 0 else t
    return FluctuationRecord(U=U, T=T, t_circ=t_circ, tau_rho=field.elapsed_time,
                             flagged=flagged)


def time_identity_check(field: LocalTimeField, record: FluctuationRecord,
                        domain: LatticeDomain) -> float:
    """Pathwise residual of t = tau/deg_total - (1 - deg_rho/deg_total) U."""
    ratio = domain.deg_rho / domain.deg_total
    t = field.horizon
    return abs(t - record.tau_rho / domain.deg_total + (1.0 - ratio) * record.U)


def hitting_time(domain: LatticeDomain, start: int, seed: int,
                 replicate: int = 0) -> float:
    """Continuous time until the walk from an interior vertex first reaches
    the boundary vertex (a boundary run with zero local-time target)."""
    if not (0 <= start < domain.n):
        raise ParameterError("start must be an interior vertex")
    field = run_walk(domain, WalkConfig(start=start, mode="boundary",
                                        horizon=0.0, seed=seed,
                                        replicate=replicate))
    return field.elapsed_time


def cover_time(domain: LatticeDomain, start, seed: int, replicate: int = 0) -> int:
    indptr, indices = domain.walk_graph()
    s = kernel_seed(seed, "cover", replicate)
    steps = _kernels.cover_core(indptr, indices, domain.n,
                                _start_index(domain, start), s, COVER_CAP)
    if steps < 0:
        raise ParameterError(f"cover time exceeded cap {COVER_CAP}")
    return int(steps)


def sandwich_check(domain: LatticeDomain, theta: float, b_N: float,
                   seed: int, reps: int) -> float:
    """Empirical probability that the continuous-time field at the full horizon
    is sandwiched between boundary-time fields at shifted horizons.

    Each replicate replays one trajectory (same kernel seed) under the three
    stopping rules, so all fields are read off a single path.
    """
    if theta <= 0 or b_N <= 0:
        raise ParameterError("theta and b_N must be positive")
    g = 1.0 / (2.0 * math.pi)
    t = 2.0 * g * theta * math.log(domain.N) ** 2
    indptr, indices = domain.walk_graph()
    n = domain.n
    rho = domain.n
    hits = 0
    delta = b_N * t ** 0.25
    lo_t = max(t, 0.0)  # placeholder, replaced per replicate below
    for r in range(reps):
        s = kernel_seed(seed, "sandwich", r)
        # pass 1: boundary time t, to get the fluctuation and shifted horizon
        _, times1, _, _, _ = _kernels.walk_core(
            indptr, indices, n, domain.deg_rho, rho, _kernels.MODE_BOUNDARY, t, s)
        U = float((times1[:-1] / 4.0 - t).mean())
        ratio = domain.deg_rho / domain.deg_total
        t_circ = t - (1.0 - ratio) * U  # = t - (1-ratio) sqrt(2t) T
        lo_t = max(t_circ - delta, 0.0)
        hi_t = t_circ + delta
        # pass 2: continuous time deg_total * t on the same path
        _, times2, _, _, _ = _kernels.walk_core(
            indptr, indices, n, domain.deg_rho, rho, _kernels.MODE_CONTINUOUS,
            domain.deg_total * t, s)
        # passes 3-4: boundary times around the shifted horizon, same path
        _, times3, _, _, _ = _kernels.walk_core(
            indptr, indices, n, domain.deg_rho, rho, _kernels.MODE_BOUNDARY, lo_t, s)
        _, times4, _, _, _ = _kernels.walk_core(
            indptr, indices, n, domain.deg_rho, rho, _kernels.MODE_BOUNDARY, hi_t, s)
        low = times3[:-1]
        mid = times2[:-1]
        high = times4[:-1]
        if np.all(low <= mid + 1e-12) and np.all(mid <= high + 1e-12):
            hits += 1
    return hits / reps


def ray_knight_verify(domain: LatticeDomain, green: GreenOperator, t: float,
                      reps: int, seed: int, u: int | None = None) -> dict:
    """Empirical check of the second Ray-Knight identity at one vertex.

    Compares samples of Lhat_t(u) + h_u^2 / 2 (walk from the boundary vertex
    plus an independent field) against (htilde_u + sqrt(2t))^2 / 2 for a fresh
    field, via the mean identity and a two-sample KS test.
    """
    if t <= 0:
        raise ParameterError("t must be positive")
    if u is None:
        u = _central_vertex(domain)
    indptr, indices = domain.walk_graph()
    n = domain.n
    lhat_u = np.empty(reps)
    for r in range(reps):
        s = kernel_seed(seed, "rayknight-walk", r)
        _, times, _, _, _ = _kernels.walk_core(
            indptr, indices, n, domain.deg_rho, n, _kernels.MODE_BOUNDARY, t, s)
        lhat_u[r] = times[u] / 4.0
    h = np.array([f.values[u] for f in sample_dgff(green, seed + 1, reps)])
    htilde = np.array([f.values[u] for f in sample_dgff(green, seed + 2, reps)])
    lhs = lhat_u + 0.5 * h**2
    rhs = 0.5 * (htilde + math.sqrt(2.0 * t)) ** 2
    target = t + 0.5 * green[u, u]
    se = lhs.std(ddof=1) / math.sqrt(reps)
    ks = ks_2samp(lhs, rhs)
    return {
        "vertex": int(u),
        "mean_lhs": float(lhs.mean()),
        "mean_rhs": float(rhs.mean()),
        "target_mean": float(target),
        "mean_error_SE_units": float((lhs.mean() - target) / se),
        "ks_pvalue": float(ks.pvalue),
    }


def _central_vertex(domain: LatticeDomain) -> int:
    c = domain.vertices.mean(axis=0)
    return int(np.argmin(np.abs(domain.vertices - c).max(axis=1)))


def corner_vertex(domain: LatticeDomain) -> int:
    """Lattice point nearest the bounding-box corner: the 'arbitrary start'."""
    corner = domain.vertices.min(axis=0)
    return int(np.argmin(np.abs(domain.vertices - corner).max(axis=1)))


def export_traces_csv(rows: list[dict], path) -> None:
    cols = ["replicate", "mode", "horizon", "steps", "tau_rho", "U", "T",
            "max_local_time", "min_local_time", "covered"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([row.get(c, "") for c in cols])
