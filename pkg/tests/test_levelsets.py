import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from walklab.domain import DomainSpec, build_lattice
from walklab.errors import ParameterError
from walklab.levelsets import (ALPHA, export_measure_csv, export_qsequence_csv,
                               extract_level_measure,
                               gamma_tail_inequality_check, mu_tilde_atom,
                               mu_tilde_density, mu_tilde_laplace, q_sequence,
                               resample_exponential_profile,
                               resample_laplace_exact, scale_sequences)
from walklab.walk import LocalTimeField, WalkConfig, run_walk, steps_for_time

G = 1.0 / (2.0 * math.pi)


def test_scale_sequences_degenerate_lambda():
    s = scale_sequences(50, 0.7, 0.0, "thick")
    assert s.a_N == pytest.approx(s.t_N, abs=1e-12)
    assert s.W_N == pytest.approx(50**2 / math.sqrt(math.log(50)), rel=1e-12)


def test_w_hat_at_half_theta_is_N():
    s = scale_sequences(100, 0.5, 0.0, "light")
    assert s.W_hat_N == pytest.approx(100.0, rel=1e-12)


def test_thick_normalization_asymptotics():
    lam = 0.3
    s = scale_sequences(1024, 1.0, lam, "thick")
    asym = 2 * (1 - lam**2) * math.log(1024) - 0.5 * math.log(math.log(1024))
    assert abs(math.log(s.W_N) - asym) < 0.15


def test_scale_parameter_ranges():
    with pytest.raises(ParameterError):
        scale_sequences(64, 1.0, 1.2, "thick")
    with pytest.raises(ParameterError):
        scale_sequences(64, 0.25, 0.6, "thin")  # needs lam < sqrt(theta)
    with pytest.raises(ParameterError):
        scale_sequences(64, 1.0, 0.0, "light")  # needs theta < 1
    with pytest.raises(ParameterError):
        scale_sequences(64, 0.5, 0.0, "sparse")
    assert scale_sequences(64, 0.999, 0.5, "avoided").K_N > 0


@pytest.fixture(scope="module")
def run32():
    domain = build_lattice(DomainSpec("unit-square"), 32)
    scales = scale_sequences(32, 0.3, 0.2, "thick")
    steps = steps_for_time(domain, scales.t_N)
    field = run_walk(domain, WalkConfig(start="boundary", mode="discrete",
                                        horizon=steps, seed=30))
    return domain, scales, field


def test_thick_centering_cutoff(run32):
    domain, scales, field = run32
    m = extract_level_measure(field, domain, scales, "thick")
    above = sum(1 for a in m.atoms if a.value >= 0)
    assert above == int((field.interior() >= scales.a_N).sum())
    assert m.total_mass == pytest.approx(len(m.atoms) / scales.W_N)


def test_avoided_mass_of_lazy_field(run32):
    domain, _, _ = run32
    scales = scale_sequences(32, 0.3, 0.0, "avoided")
    values = np.zeros(domain.n + 1)
    values[0] = 0.25
    lazy = LocalTimeField(values=values, mode="discrete",
                          horizon=steps_for_time(domain, scales.t_N),
                          final_position=0, steps=0, elapsed_time=0.0)
    m = extract_level_measure(lazy, domain, scales, "avoided")
    assert len(m.atoms) == domain.n - 1
    assert m.total_mass == pytest.approx((domain.n - 1) / scales.W_hat_N)
    for a in m.atoms:
        assert a.value is None


def test_profile_window(run32):
    domain, scales, field = run32
    m = extract_level_measure(field, domain, scales, "thick", profile_radius=2)
    norm = math.sqrt(2 * scales.a_N)
    for a in m.atoms[:20]:
        assert len(a.profile) == 25
    # center offset of the window is (L(x)-L(x))/norm = 0
    assert all(a.profile[12] == 0.0 for a in m.atoms)
    # corner atom windows stick out of the domain and read 0 there
    corner = m.atoms[0]
    L0 = corner.value * norm + scales.a_N
    assert corner.profile[0] == pytest.approx(L0 / norm)


def test_extract_horizon_mismatch(run32):
    domain, scales, field = run32
    other = scale_sequences(32, 0.9, 0.2, "thick")
    with pytest.raises(ParameterError):
        extract_level_measure(field, domain, other, "thick")
    with pytest.raises(ParameterError):
        extract_level_measure(field, domain, scales, "thick", profile_radius=-1)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_quarter_lattice_support(seed):
    domain = build_lattice(DomainSpec("unit-square"), 8)
    field = run_walk(domain, WalkConfig(start=0, mode="discrete",
                                        horizon=200, seed=seed))
    quarters = field.interior() * 4
    assert np.array_equal(quarters, np.rint(quarters))


def test_q_sequence_basics():
    seq = q_sequence(0.5, 10)
    assert seq.coefficients[0] == 1.0
    assert seq.coefficients[1] == pytest.approx(math.pi * 0.5, abs=1e-12)
    assert np.all(seq.coefficients >= 0)
    with pytest.raises(ParameterError):
        q_sequence(1.5, 10)
    with pytest.raises(ParameterError):
        q_sequence(0.5, -1)


def test_q_generating_function():
    theta = 0.2
    seq = q_sequence(theta, 200)
    for s in (1.0, 2.0, 4.0):
        target = math.exp(ALPHA**2 * theta / (2 * s))
        assert abs(seq.generating_sum(s) - target) < 1e-8


def test_mu_tilde_density_and_atom():
    theta = 0.3
    b = ALPHA**2 * theta / 2
    assert mu_tilde_atom() == 1.0
    assert mu_tilde_density(theta, 0.0) == pytest.approx(b)
    assert mu_tilde_density(theta, 1e-10) == pytest.approx(b, rel=1e-4)
    with pytest.raises(ParameterError):
        mu_tilde_density(theta, -1.0)


def test_mu_tilde_laplace_closed_form():
    for theta in (0.2, 0.5):
        for s in (0.5, 1.0, 2.0):
            target = math.exp(ALPHA**2 * theta / (2 * s))
            assert abs(mu_tilde_laplace(theta, s) - target) / target < 1e-6


def test_resample_zero_profile():
    out = resample_exponential_profile(np.zeros(5), 1)
    assert np.all(out == 0.0)
    with pytest.raises(ParameterError):
        resample_exponential_profile(np.array([0.3]), 1)


def test_resample_mean():
    profile = np.array([0.5, 1.25, 3.0])
    reps = 20000
    draws = np.stack([resample_exponential_profile(profile, 7, r)
                      for r in range(reps)])
    for k in range(3):
        se = draws[:, k].std(ddof=1) / math.sqrt(reps)
        assert abs(draws[:, k].mean() - profile[k]) < 3 * se


def test_resample_laplace_identity():
    profile = np.array([0.25, 1.0, 2.75])
    t = np.array([0.5, 1.0, 2.0])
    reps = 20000
    vals = np.array([math.exp(-(t * resample_exponential_profile(profile, 8, r)).sum())
                     for r in range(reps)])
    exact = resample_laplace_exact(profile, t)
    se = vals.std(ddof=1) / math.sqrt(reps)
    assert abs(vals.mean() - exact) < 3 * se


def test_gamma_tail_lemmas():
    res = gamma_tail_inequality_check(10, 5, 3, "L7.3")
    assert res["holds"] and res["rhs_bound"] == pytest.approx(math.exp(-15 / 18))
    res = gamma_tail_inequality_check(20, 5, 3, "L7.5")
    assert res["holds"] and res["rhs_bound"] == pytest.approx(math.exp(-12 / 15))
    res = gamma_tail_inequality_check(10, 5, 0, "L7.3")
    assert res["lhs_ratio"] == pytest.approx(1.0)
    with pytest.raises(ParameterError):
        gamma_tail_inequality_check(10, 1, 3, "L7.3")
    with pytest.raises(ParameterError):
        gamma_tail_inequality_check(4, 3, 2, "L7.5")


def test_measure_csv_export(tmp_path, run32):
    domain, scales, field = run32
    m = extract_level_measure(field, domain, scales, "thick", profile_radius=1)
    path = tmp_path / "m.csv"
    export_measure_csv(m, path, metadata="meta")
    lines = path.read_text().splitlines()
    assert lines[0] == "# meta"
    assert lines[1].startswith("kind,x,y,h,weight,p_dz0")
    assert len(lines) == 2 + len(m.atoms)
    qpath = tmp_path / "q.csv"
    export_qsequence_csv(q_sequence(0.4, 5), qpath, metadata="meta")
    assert qpath.read_text().splitlines()[1] == "n,q_n"
