"""Scale sequences and exceptional-point measures for local-time fields.

Four kinds of exceptional points are extracted from a local-time field:
"thick" (local time above a high threshold), "thin" (below a low one),
"light" (local time of order one), and "avoided" (never visited).  Each kind
comes with its own normalizing sequence and, optionally, a local profile
recorded on a square window around every atom.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction

import numpy as np
from scipy.integrate import quad
from scipy.special import gammainc, gammaincc, i1, i1e

from .domain import LatticeDomain
from .errors import ParameterError
from .fields import window_offsets
from .rng import stream
from .walk import LocalTimeField, steps_for_time

G_CONST = 1.0 / (2.0 * math.pi)
ALPHA = 2.0 / math.sqrt(G_CONST)  # alpha^2 = 8*pi

KINDS = ("thick", "thin", "light", "avoided")


@dataclass(frozen=True)
class ScaleSequences:
    N: int
    theta: float
    lam: float
    kind: str
    t_N: float
    a_N: float
    W_N: float
    W_hat_N: float
    K_N: float


def scale_sequences(N: int, theta: float, lam: float, kind: str) -> ScaleSequences:
    """Evaluate the normalizing sequences for one experiment.

    Thick points use threshold a_N above t_N (lam in (0,1)), thin points
    below it (lam in (0, min(sqrt(theta),1))), light and avoided points need
    theta in (0,1).  lam may be 0, which collapses a_N onto t_N.
    """
    if kind not in KINDS:
        raise ParameterError(f"kind must be one of {KINDS}")
    if N < 2:
        raise ParameterError("N must be at least 2")
    if theta <= 0:
        raise ParameterError("theta must be positive")
    if kind == "thick":
        if not (0 <= lam < 1):
            raise ParameterError("thick points need lambda in [0, 1)")
        root = math.sqrt(theta) + lam
    elif kind == "thin":
        if not (0 <= lam < min(math.sqrt(theta), 1.0)):
            raise ParameterError(
                "thin points need lambda in [0, min(sqrt(theta), 1))")
        root = math.sqrt(theta) - lam
    else:
        if not (0 < theta < 1):
            raise ParameterError(f"{kind} points need theta in (0, 1)")
        root = math.sqrt(theta)
        if lam < 0:
            raise ParameterError("lambda must be nonnegative")
    logN = math.log(N)
    g = G_CONST
    t_N = 2.0 * g * theta * logN**2
    a_N = 2.0 * g * root**2 * logN**2
    W_N = (N**2 / math.sqrt(logN)) * math.exp(
        -((math.sqrt(2 * t_N) - math.sqrt(2 * a_N)) ** 2) / (2 * g * logN))
    W_hat_N = N**2 * math.exp(-t_N / (g * logN))
    a_hat = 2.0 * lam * math.sqrt(g) * logN
    K_N = (N**2 / math.sqrt(logN)) * math.exp(-a_hat**2 / (2 * g * logN))
    return ScaleSequences(N=N, theta=theta, lam=lam, kind=kind, t_N=t_N,
                          a_N=a_N, W_N=W_N, W_hat_N=W_hat_N, K_N=K_N)


@dataclass(frozen=True)
class Atom:
    position: tuple[float, float]  # continuum coordinates x/N
    value: float | None  # None for avoided points
    profile: np.ndarray | None = None


@dataclass
class PointMeasure:
    kind: str
    atoms: list[Atom]
    weight_per_atom: float
    scales: ScaleSequences
    seed: int | None = None
    profile_radius: int | None = None

    @property
    def total_mass(self) -> float:
        return len(self.atoms) * self.weight_per_atom


def extract_level_measure(field: LocalTimeField, domain: LatticeDomain,
                          scales: ScaleSequences, kind: str,
                          profile_radius: int | None = None,
                          seed: int | None = None) -> PointMeasure:
    """Turn one local-time field into the point measure of the given kind.

    The field must be a discrete-mode run over exactly
    floor(t_N * deg_total) steps, so the horizons of field and scales agree.
    """
    if kind not in KINDS:
        raise ParameterError(f"kind must be one of {KINDS}")
    if field.mode != "discrete":
        raise ParameterError("level measures need a discrete-mode field")
    want = steps_for_time(domain, scales.t_N)
    if int(field.horizon) != want:
        raise ParameterError(
            f"field horizon {field.horizon} does not match scales ({want} steps)")
    if profile_radius is not None and profile_radius < 0:
        raise ParameterError("profile_radius must be >= 0")

    L = field.interior()
    if kind == "avoided":
        mask = L == 0.0
        weight = 1.0 / scales.W_hat_N
    elif kind == "light":
        mask = np.ones(domain.n, dtype=bool)
        weight = 1.0 / scales.W_hat_N
    elif kind == "thick":
        mask = np.ones(domain.n, dtype=bool)
        weight = 1.0 / scales.W_N
    else:  # thin
        mask = np.ones(domain.n, dtype=bool)
        weight = 1.0 / scales.W_N

    idx = np.nonzero(mask)[0]
    offsets = window_offsets(profile_radius) if profile_radius is not None else None
    norm = math.sqrt(2.0 * scales.a_N) if scales.a_N > 0 else 1.0
    atoms: list[Atom] = []
    for i in idx:
        x = domain.vertices[i]
        if kind in ("thick", "thin"):
            value = (L[i] - scales.a_N) / norm
        elif kind == "light":
            value = float(L[i])
        else:
            value = None
        prof = None
        if offsets is not None:
            prof = np.zeros(len(offsets))
            for k, (dx, dy) in enumerate(offsets):
                p = (x[0] + dx, x[1] + dy)
                lv = L[domain.index_of(p)] if domain.contains(p) else 0.0
                if kind == "avoided":
                    prof[k] = lv
                else:
                    prof[k] = (L[i] - lv) / norm
        atoms.append(Atom(position=(x[0] / scales.N, x[1] / scales.N),
                          value=value, profile=prof))
    return PointMeasure(kind=kind, atoms=atoms, weight_per_atom=weight,
                        scales=scales, seed=seed, profile_radius=profile_radius)


@dataclass
class QSequence:
    theta: float
    coefficients: np.ndarray  # q_0 .. q_nmax

    def generating_sum(self, s: float) -> float:
        """Truncated sum of q_n (1+s/4)^{-n}; the closed-form limit is
        exp(alpha^2 theta / (2 s))."""
        x = 1.0 / (1.0 + s / 4.0)
        return float(np.polynomial.polynomial.polyval(x, self.coefficients))


def q_sequence(theta: float, nmax: int) -> QSequence:
    """Coefficients q_n of the light-point intensity, by the closed form

        q_{n+1} = n! * sum_{j=0}^{n} c^{j+1} / (j! (j+1)! (n-j)!),  c = pi*theta.

    Terms are accumulated as exact rationals and converted at the end, so
    the only rounding is the final float cast.
    """
    if not (0 < theta < 1):
        raise ParameterError("theta must be in (0, 1)")
    if nmax < 0:
        raise ParameterError("nmax must be >= 0")
    c = Fraction(math.pi * theta)
    coeffs = [Fraction(1)]
    # running products: comb(n, j) keeps the n!/(j!(n-j)!) part exact
    for n in range(nmax):
        total = Fraction(0)
        cf = c
        binom = 1
        fact = Fraction(1)  # (j+1)!
        for j in range(n + 1):
            total += binom * cf / fact
            cf *= c
            binom = binom * (n - j) // (j + 1)
            fact *= j + 2
        coeffs.append(total)
    out = np.array([float(v) for v in coeffs])
    if not np.all(np.isfinite(out)):
        raise ParameterError("nmax too large: coefficients overflow float range")
    return QSequence(theta=theta, coefficients=out)


def mu_tilde_density(theta: float, h: float) -> float:
    """Density of the continuous part of the light-point intensity at h > 0.

    Series sum_{n>=0} b^{n+1} h^n / (n! (n+1)!) with b = alpha^2 theta / 2,
    which equals sqrt(b/h) * I_1(2 sqrt(b h)).  The measure also carries a
    unit atom at 0, reported by mu_tilde_atom.
    """
    if h < 0:
        raise ParameterError("h must be >= 0")
    b = ALPHA**2 * theta / 2.0
    if h == 0.0:
        return b  # n=0 term; the series limit as h -> 0+
    return float(math.sqrt(b / h) * i1(2.0 * math.sqrt(b * h)))


def mu_tilde_atom() -> float:
    return 1.0


def mu_tilde_laplace(theta: float, s: float) -> float:
    """Laplace transform 1 + int_0^inf density(h) e^{-s h} dh by quadrature;
    the closed form is exp(alpha^2 theta / (2 s))."""
    if s <= 0:
        raise ParameterError("s must be positive")
    b = ALPHA**2 * theta / 2.0

    def integrand(h):
        if h == 0.0:
            return b
        z = 2.0 * math.sqrt(b * h)
        # i1(z) = i1e(z) e^z; folding e^z into the exponent avoids overflow
        return math.sqrt(b / h) * i1e(z) * math.exp(z - s * h)

    val, _ = quad(integrand, 0.0, np.inf, limit=400)
    return 1.0 + val


def resample_exponential_profile(profile: np.ndarray, seed: int,
                                 replicate: int = 0) -> np.ndarray:
    """Replace each quarter-integer local time l(z) by 1/4 times the sum of
    4*l(z) independent unit exponentials."""
    profile = np.asarray(profile, dtype=float)
    counts4 = profile * 4.0
    rounded = np.rint(counts4)
    if not np.all(np.abs(counts4 - rounded) < 1e-9) or np.any(rounded < 0):
        raise ParameterError("profile values must lie in (1/4) * {0, 1, 2, ...}")
    rng = stream(seed, "resample", replicate)
    out = np.zeros_like(profile)
    flat = out.reshape(-1)
    for i, m in enumerate(rounded.reshape(-1).astype(np.int64)):
        if m > 0:
            flat[i] = 0.25 * rng.standard_exponential(m).sum()
    return out


def resample_laplace_exact(profile: np.ndarray, t: np.ndarray) -> float:
    """Closed-form E[exp(-sum_z t(z) * resampled(z))] for a quarter-integer
    profile: each site contributes (1 + t/4)^{-4 l}."""
    profile = np.asarray(profile, dtype=float)
    t = np.asarray(t, dtype=float)
    return float(np.exp(-(4.0 * profile * np.log1p(t / 4.0)).sum()))


def gamma_tail_inequality_check(k: int, s: float, t: float, which: str) -> dict:
    """Exact tail-ratio checks for sums of k unit exponentials (Gamma(k, 1)).

    "L7.3": P(X > k+s+t) / P(X > k+s) <= exp(-s t / (k+s+t)), for s >= t >= 0.
    "L7.5": P(X < k-s-t) / P(X < k-s) <= exp(-t (s-1) / (k-s)), for s, t >= 0
    with s + t < k.
    """
    if k < 1:
        raise ParameterError("k must be a positive integer")
    if which == "L7.3":
        if not (s >= t >= 0):
            raise ParameterError("upper-tail check needs s >= t >= 0")
        lhs = float(gammaincc(k, k + s + t) / gammaincc(k, k + s))
        rhs = math.exp(-s * t / (k + s + t))
    elif which == "L7.5":
        if not (s >= 0 and t >= 0 and s + t < k):
            raise ParameterError("lower-tail check needs s, t >= 0 and s + t < k")
        lhs = float(gammainc(k, k - s - t) / gammainc(k, k - s))
        rhs = math.exp(-t * (s - 1.0) / (k - s))
    else:
        raise ParameterError("which must be 'L7.3' or 'L7.5'")
    return {"lhs_ratio": lhs, "rhs_bound": rhs, "holds": lhs <= rhs + 1e-12}


def export_measure_csv(measure: PointMeasure, path, metadata: str | None = None) -> None:
    r = measure.profile_radius
    prof_cols = []
    if r is not None:
        prof_cols = [f"p_dz{k}" for k in range((2 * r + 1) ** 2)]
    with open(path, "w", newline="") as fh:
        if metadata:
            fh.write(f"# {metadata}\n")
        w = csv.writer(fh)
        w.writerow(["kind", "x", "y", "h", "weight"] + prof_cols)
        for a in measure.atoms:
            row = [measure.kind, a.position[0], a.position[1],
                   "" if a.value is None else a.value, measure.weight_per_atom]
            if r is not None:
                row += list(a.profile)
            w.writerow(row)


def export_qsequence_csv(seq: QSequence, path, metadata: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if metadata:
            fh.write(f"# {metadata}\n")
        w = csv.writer(fh)
        w.writerow(["n", "q_n"])
        for n, q in enumerate(seq.coefficients):
            w.writerow([n, repr(float(q))])
