"""Built-in verification suite.

Each check computes a measured quantity, compares it against a target with a
pinned tolerance, and reports a verdict.  The CLI `verify` subcommand and the
acceptance tests both run these; tolerances can be overridden per check to
exercise the failure path deliberately.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .continuum import (d_function_green, d_function_poisson,
                        d_route_difference, sigma_D2_sparse)
from .domain import DomainSpec, build_lattice, square_grid
from .errors import ParameterError
from .fields import cov_Y_hat, sample_dgff, verify_pinned_relation, zero_average_decompose
from .green import (PotentialKernelEvaluator, compute_green, green_column,
                    kac_moments, system_residual)
from .levelsets import (gamma_tail_inequality_check, mu_tilde_laplace,
                        q_sequence, resample_exponential_profile,
                        resample_laplace_exact, scale_sequences)
from .walk import (WalkConfig, corner_vertex, fluctuations, hitting_time,
                   ray_knight_verify, run_walk, sandwich_check,
                   steps_for_time, time_identity_check)

G = 1.0 / (2.0 * math.pi)
DEFAULT_SEED = 20260826


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: dict
    tolerance: dict
    seconds: float

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        m = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                      for k, v in self.measured.items())
        t = ", ".join(f"{k}<={v:.3g}" if isinstance(v, float) else f"{k}:{v}"
                      for k, v in self.tolerance.items())
        return f"[{verdict}] {self.name}: {m}  (tolerance {t})"


def _tol(defaults: dict, overrides: dict | None) -> dict:
    out = dict(defaults)
    if overrides:
        out.update(overrides)
    return out


def check_green_exactness(seed=DEFAULT_SEED, overrides=None) -> CheckResult:
    tol = _tol({"residual": 1e-10, "symmetry": 1e-10, "seconds": 60.0}, overrides)
    t0 = time.time()
    domain = square_grid(64)
    green = compute_green(domain)
    resid = system_residual(domain, green)
    sym = green.symmetry_defect()
    dt = time.time() - t0
    ok = resid <= tol["residual"] and sym <= tol["symmetry"] and dt < tol["seconds"]
    return CheckResult("green-exactness", ok,
                       {"residual": resid, "symmetry_defect": sym, "seconds": dt},
                       tol, dt)


def check_green_log_growth(seed=DEFAULT_SEED, overrides=None) -> CheckResult:
    tol = _tol({"relative": 0.05}, overrides)
    t0 = time.time()
    diag = {}
    for side in (16, 32, 64, 128):
        domain = square_grid(side)
        c = domain.index_of(((side + 3) // 2, (side + 3) // 2))
        diag[side] = green_column(domain, c)[c]
    incs = [diag[2 * s] - diag[s] for s in (16, 32, 64)]
    worst = max(abs(i / (G * math.log(2)) - 1.0) for i in incs)
    return CheckResult("green-log-growth", worst <= tol["relative"],
                       {"worst_relative_deviation": worst,
                        "increments": tuple(round(i, 6) for i in incs)},
                       tol, time.time() - t0)


def check_potential_kernel(seed=DEFAULT_SEED, overrides=None) -> CheckResult:
    tol = _tol({"value": 1e-6, "harmonicity": 1e-6}, overrides)
    t0 = time.time()
    ev = PotentialKernelEvaluator(M=2048)
    a0 = ev((0, 0))
    e1 = abs(ev((1, 0)) - 0.25)
    e11 = abs(ev((1, 1)) - 1.0 / math.pi)
    ev.prefill(4)
    # 5-point Laplacian: 1 at the origin, 0 elsewhere
    worst_h = 0.0
    lap0 = None
    for x in ((0, 0), (1, 0), (1, 1), (2, 1), (3, 0), (2, 2)):
        lap = sum(ev((x[0] + dx, x[1] + dy))
                  for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))) - 4 * ev(x)
        if x == (0, 0):
            lap0 = abs(lap - 1.0)
        else:
            worst_h = max(worst_h, abs(lap))
    ok = (a0 == 0.0 and e1 <= tol["value"] and e11 <= tol["value"]
          and worst_h <= tol["harmonicity"] and lap0 <= tol["harmonicity"])
    return CheckResult("potential-kernel", ok,
                       {"a_origin": a0, "err_e1": e1, "err_diag": e11,
                        "harmonicity_off_origin": worst_h, "laplacian_at_origin_err": lap0},
                       tol, time.time() - t0)


def check_zero_average(seed=DEFAULT_SEED, overrides=None) -> CheckResult:
    tol = _tol({"sums": 1e-9, "cov": 1e-12}, overrides)
    t0 = time.time()
    domain = build_lattice(DomainSpec("unit-square"), 32)
    green = compute_green(domain)
    sample = sample_dgff(green, seed, 1)[0]
    dec = zero_average_decompose(sample, green, domain)
    hat_sum = abs(dec["hat_field"].values.sum())
    d_sum = abs(dec["dN"].sum() - domain.n)
    cov = float(np.abs(cov_Y_hat(green, domain)).max())
    ok = hat_sum <= tol["sums"] and d_sum <= tol["sums"] and cov <= tol["cov"]
    return CheckResult("zero-average", ok,
                       {"hat_field_sum": hat_sum, "d_sum_err": d_sum, "max_cov_Y_hat": cov},
                       tol, time.time() - t0)


def check_ray_knight(seed=DEFAULT_SEED, overrides=None, reps=20000) -> CheckResult:
    tol = _tol({"se_units": 3.0, "ks_pvalue_min": 0.01, "seconds": 300.0}, overrides)
    t0 = time.time()
    domain = square_grid(16)
    green = compute_green(domain)
    res = ray_knight_verify(domain, green, 4.0, reps, seed)
    dt = time.time() - t0
    ok = (abs(res["mean_error_SE_units"]) <= tol["se_units"]
          and res["ks_pvalue"] > tol["ks_pvalue_min"] and dt < tol["seconds"])
    res["seconds"] = dt
    return CheckResult("ray-knight", ok, res, tol, dt)


def check_pathwise_identity(seed=DEFAULT_SEED, overrides=None, reps=1000) -> CheckResult:
    tol = _tol({"residual": 1e-9}, overrides)
    t0 = time.time()
    domain = build_lattice(DomainSpec("unit-square"), 32)
    worst = 0.0
    for r in range(reps):
        f = run_walk(domain, WalkConfig(start="boundary", mode="boundary",
                                        horizon=2.0, seed=seed, replicate=r))
        rec = fluctuations(f, domain, 2.0)
        worst = max(worst, time_identity_check(f, rec, domain))
    return CheckResult("pathwise-identity", worst <= tol["residual"],
                       {"worst_residual": worst, "runs": reps},
                       tol, time.time() - t0)


def check_variance_formula(seed=DEFAULT_SEED, overrides=None, reps=20000) -> CheckResult:
    tol = _tol({"se_units": 3.0}, overrides)
    t0 = time.time()
    domain = square_grid(16)
    green = compute_green(domain)
    t = 2.0
    km = kac_moments(green, domain, 0, t)
    us = np.empty(reps)
    for r in range(reps):
        f = run_walk(domain, WalkConfig(start="boundary", mode="boundary",
                                        horizon=t, seed=seed, replicate=r))
        us[r] = (f.interior() - t).mean()
    v = us.var(ddof=1)
    se_var = v * math.sqrt(2.0 / (reps - 1))
    z_var = (v - km["var_U_N"]) / se_var
    hs = np.array([hitting_time(domain, 0, seed + 1, r) ** 2 for r in range(reps)])
    z_kac = (hs.mean() - km["second_moment_H_rho"]) / (hs.std(ddof=1) / math.sqrt(reps))
    ok = abs(z_var) <= tol["se_units"] and abs(z_kac) <= tol["se_units"]
    return CheckResult("variance-formula", ok,
                       {"mc_var": float(v), "formula_var": km["var_U_N"],
                        "z_var": float(z_var), "mc_kac": float(hs.mean()),
                        "formula_kac": km["second_moment_H_rho"], "z_kac": float(z_kac)},
                       tol, time.time() - t0)


def check_sandwich(seed=DEFAULT_SEED, overrides=None, reps=1000) -> CheckResult:
    tol = _tol({"min_rate": 0.90}, overrides)
    t0 = time.time()
    domain = build_lattice(DomainSpec("unit-square"), 64)
    rate = sandwich_check(domain, 1.0, math.log(64), seed, reps)
    return CheckResult("sandwich", rate >= tol["min_rate"],
                       {"rate": rate, "replicates": reps},
                       tol, time.time() - t0)


def _q_series_oracle(theta: float, nmax: int) -> np.ndarray:
    """Independent route to q_n: Taylor coefficients of exp(c x / (1-x)),
    c = pi*theta, via the ODE recurrence (n+1) f_{n+1} = (2n+c) f_n - (n-1) f_{n-1}."""
    c = math.pi * theta
    f = np.zeros(nmax + 1)
    f[0] = 1.0
    if nmax >= 1:
        f[1] = c
    for n in range(1, nmax):
        f[n + 1] = ((2 * n + c) * f[n] - (n - 1) * f[n - 1]) / (n + 1)
    return f


def check_q_sequence(seed=DEFAULT_SEED, overrides=None) -> CheckResult:
    tol = _tol({"q1": 1e-12, "genfn": 1e-8, "cross": 1e-10}, overrides)
    t0 = time.time()
    theta = 0.2
    seq = q_sequence(theta, 200)
    q0_ok = seq.coefficients[0] == 1.0
    q1_err = abs(seq.coefficients[1] - math.pi * theta)
    genfn_err = max(abs(seq.generating_sum(s) - math.exp(4 * math.pi * theta / s))
                    for s in (1.0, 2.0, 4.0))
    oracle = _q_series_oracle(theta, 50)
    denom = np.maximum(1.0, np.abs(oracle))
    cross_err = float(np.abs((seq.coefficients[:51] - oracle) / denom).max())
    ok = q0_ok and q1_err <= tol["q1"] and genfn_err <= tol["genfn"] and cross_err <= tol["cross"]
    return CheckResult("q-sequence", ok,
                       {"q0_exact": q0_ok, "q1_err": q1_err,
                        "genfn_err": genfn_err, "cross_route_err": cross_err},
                       tol, time.time() - t0)


def check_mu_tilde(seed=DEFAULT_SEED, overrides=None) -> CheckResult:
    tol = _tol({"laplace": 1e-6}, overrides)
    t0 = time.time()
    worst = 0.0
    for theta in (0.2, 0.5):
        for s in (0.5, 1.0, 2.0):
            target = math.exp(4.0 * math.pi * theta / s)
            worst = max(worst, abs(mu_tilde_laplace(theta, s) - target) / target)
    return CheckResult("mu-tilde", worst <= tol["laplace"],
                       {"worst_relative_err": worst}, tol, time.time() - t0)


def check_covariance_algebra(seed=DEFAULT_SEED, overrides=None) -> CheckResult:
    tol = _tol({"identity": 1e-9, "min_eig": -1e-8}, overrides)
    t0 = time.time()
    ev = PotentialKernelEvaluator(M=2048)
    res = verify_pinned_relation(5, ev)  # 11x11 window
    ok = (res["max_identity_error"] <= tol["identity"]
          and res["min_eigenvalue"] >= tol["min_eig"])
    return CheckResult("covariance-algebra", ok, res, tol, time.time() - t0)


def check_gamma_tails(seed=DEFAULT_SEED, overrides=None) -> CheckResult:
    tol = _tol({}, overrides)
    t0 = time.time()
    checked = 0
    failed = 0
    for k in (5, 10, 20, 50):
        for s in (0.5, 1.0, 2.0, 5.0):
            for t in (0.5, 1.0, 2.0, 5.0):
                if s >= t:
                    checked += 1
                    if not gamma_tail_inequality_check(k, s, t, "L7.3")["holds"]:
                        failed += 1
                if s + t < k:
                    checked += 1
                    if not gamma_tail_inequality_check(k, s, t, "L7.5")["holds"]:
                        failed += 1
    return CheckResult("gamma-tails", failed == 0,
                       {"grid_points": checked, "violations": failed},
                       tol, time.time() - t0)


def check_d_crosscheck(seed=DEFAULT_SEED, overrides=None) -> CheckResult:
    tol = _tol({"integral_rel": 0.01, "min_value": -1e-9, "sup_diff": 0.05}, overrides)
    t0 = time.time()
    spec = DomainSpec("unit-square")
    sigma2 = sigma_D2_sparse(build_lattice(spec, 512))
    gg = d_function_green(build_lattice(spec, 128))
    pg = d_function_poisson(128, sigma2)
    int_err = max(abs(gg.integral() - 1.0), abs(pg.integral() - 1.0))
    minv = min(gg.min_value(), pg.min_value())
    sup = d_route_difference(gg, pg)
    ok = (int_err <= tol["integral_rel"] and minv >= tol["min_value"]
          and sup < tol["sup_diff"])
    return CheckResult("d-crosscheck", ok,
                       {"integral_err": int_err, "min_value": minv, "sup_diff": sup},
                       tol, time.time() - t0)


def check_trends(seed=DEFAULT_SEED, overrides=None, reps=50, avoided_reps=200) -> CheckResult:
    tol = _tol({"max_band": (0.7, 1.3), "min_frac": 0.1, "mass_factor": 2.0}, overrides)
    t0 = time.time()
    spec = DomainSpec("unit-square")
    domain = build_lattice(spec, 256)
    scales = scale_sequences(256, 1.0, 0.0, "thick")
    steps = steps_for_time(domain, scales.t_N)
    start = corner_vertex(domain)
    logsq = math.log(256) ** 2
    mx, mn = [], []
    for r in range(reps):
        f = run_walk(domain, WalkConfig(start=start, mode="discrete",
                                        horizon=steps, seed=seed, replicate=r))
        mx.append(f.interior().max() / logsq)
        mn.append(f.interior().min() / logsq)
    med_max = float(np.median(mx))
    med_min = float(np.median(mn))
    lo, hi = tol["max_band"]
    max_ok = lo * 8 * G <= med_max <= hi * 8 * G
    min_ok = med_min <= tol["min_frac"] * 2 * G
    medians = {}
    for N in (64, 128, 256):
        dN = build_lattice(spec, N)
        sN = scale_sequences(N, 0.3, 0.0, "avoided")
        st = steps_for_time(dN, sN.t_N)
        cv = corner_vertex(dN)
        masses = [np.count_nonzero(
            run_walk(dN, WalkConfig(start=cv, mode="discrete", horizon=st,
                                    seed=seed + 1, replicate=r)).interior() == 0)
            / sN.W_hat_N for r in range(avoided_reps)]
        medians[N] = float(np.median(masses))
    vals = list(medians.values())
    mass_ok = max(vals) / min(vals) <= tol["mass_factor"]
    return CheckResult("trends", max_ok and min_ok and mass_ok,
                       {"median_max_over_logsq": med_max, "target_8g": 8 * G,
                        "median_min_over_logsq": med_min,
                        "avoided_medians": tuple(round(v, 4) for v in vals)},
                       tol, time.time() - t0)


def check_resampling(seed=DEFAULT_SEED, overrides=None, reps=20000) -> CheckResult:
    tol = _tol({"se_units": 3.0}, overrides)
    t0 = time.time()
    profile = np.array([0.25, 1.0, 2.75])
    t = np.array([0.5, 1.0, 2.0])
    vals = np.empty(reps)
    for r in range(reps):
        out = resample_exponential_profile(profile, seed, r)
        vals[r] = math.exp(-(t * out).sum())
    exact = resample_laplace_exact(profile, t)
    z = (vals.mean() - exact) / (vals.std(ddof=1) / math.sqrt(reps))
    return CheckResult("resampling", abs(z) <= tol["se_units"],
                       {"mc_laplace": float(vals.mean()), "exact": exact, "z": float(z)},
                       tol, time.time() - t0)


CHECKS = {
    "green-exactness": check_green_exactness,
    "green-log-growth": check_green_log_growth,
    "potential-kernel": check_potential_kernel,
    "zero-average": check_zero_average,
    "ray-knight": check_ray_knight,
    "pathwise-identity": check_pathwise_identity,
    "variance-formula": check_variance_formula,
    "sandwich": check_sandwich,
    "q-sequence": check_q_sequence,
    "mu-tilde": check_mu_tilde,
    "covariance-algebra": check_covariance_algebra,
    "gamma-tails": check_gamma_tails,
    "d-crosscheck": check_d_crosscheck,
    "trends": check_trends,
    "resampling": check_resampling,
}


def verify_suite(selector: str = "all", seed: int = DEFAULT_SEED,
                 overrides: dict | None = None) -> list[CheckResult]:
    if selector == "all":
        names = list(CHECKS)
    elif selector in CHECKS:
        names = [selector]
    else:
        raise ParameterError(f"unknown check {selector!r}; known: {', '.join(CHECKS)}")
    return [CHECKS[name](seed=seed, overrides=overrides) for name in names]
