import math

import numpy as np
import pytest
from scipy.stats import kstest

from walklab.domain import DomainSpec, build_lattice, square_grid
from walklab.errors import ParameterError
from walklab.fields import (FIELD_SAMPLING_CAP, cov_Y_hat, export_samples_csv,
                            local_covariance, sample_dgff,
                            verify_pinned_relation, zero_average_decompose)
from walklab.green import PotentialKernelEvaluator, compute_green

G = 1.0 / (2.0 * math.pi)


@pytest.fixture(scope="module")
def grid16():
    d = square_grid(16)
    return d, compute_green(d)


@pytest.fixture(scope="module")
def evaluator():
    ev = PotentialKernelEvaluator(M=512)
    ev.prefill(10)
    return ev


def test_single_vertex_variance():
    d = build_lattice(DomainSpec("unit-square"), 4)
    g = compute_green(d)
    vals = np.array([s.values[0] for s in sample_dgff(g, 8, 100000)])
    v = vals.var(ddof=1)
    se = 0.25 * math.sqrt(2.0 / (len(vals) - 1))
    assert abs(v - 0.25) < 3 * se


def test_sampling_deterministic(grid16):
    _, g = grid16
    a = sample_dgff(g, 99, 2)
    b = sample_dgff(g, 99, 2)
    for s1, s2 in zip(a, b):
        assert np.array_equal(s1.values, s2.values)


def test_empirical_covariance_matches_green(grid16):
    d, g = grid16
    samples = np.stack([s.values for s in sample_dgff(g, 5, 10000)])
    rng = np.random.default_rng(2)
    pairs = rng.integers(0, d.n, size=(10, 2))
    n = len(samples)
    for a, b in pairs:
        emp = np.mean(samples[:, a] * samples[:, b])
        # SE of a product-moment estimate for joint Gaussians
        se = math.sqrt((g[a, a] * g[b, b] + g[a, b] ** 2) / n)
        assert abs(emp - g[int(a), int(b)]) < 3 * se


def test_zero_average_identities(grid16):
    d, g = grid16
    s = sample_dgff(g, 3, 1)[0]
    dec = zero_average_decompose(s, g, d)
    assert abs(dec["hat_field"].values.sum()) < 1e-9
    assert abs(dec["dN"].sum() - d.n) < 1e-9
    assert np.abs(cov_Y_hat(g, d)).max() < 1e-12


def test_whiteness_of_decomposition(grid16):
    d, g = grid16
    samples = sample_dgff(g, 21, 10000)
    ys = np.empty(len(samples))
    hats = np.empty((len(samples), d.n))
    for k, s in enumerate(samples):
        dec = zero_average_decompose(s, g, d)
        ys[k] = dec["Y"]
        hats[k] = dec["hat_field"].values
    rng = np.random.default_rng(4)
    for x in rng.integers(0, d.n, size=10):
        emp = np.mean(ys * hats[:, x])
        se = math.sqrt(ys.var() * hats[:, x].var() / len(ys))
        assert abs(emp) < 3 * se


def test_gaussian_marginal_ks(grid16):
    d, g = grid16
    u = d.n // 2
    vals = np.array([s.values[u] for s in sample_dgff(g, 13, 10000)])
    res = kstest(vals / math.sqrt(g[u, u]), "norm")
    assert res.pvalue > 0.01


def test_pinned_covariance_diagonal(evaluator):
    win = local_covariance("pinned", 3, evaluator)
    for k, z in enumerate(win.offsets):
        assert win.matrix[k, k] == pytest.approx(2.0 * evaluator(z), abs=1e-12)


def test_tilde_vanishes_at_origin(evaluator):
    win = local_covariance("tilde", 3, evaluator)
    zero = int(np.flatnonzero(np.all(win.offsets == 0, axis=1))[0])
    assert np.abs(win.matrix[zero, :]).max() < 1e-12
    assert np.abs(win.matrix[:, zero]).max() < 1e-12


def test_pinned_relation_and_psd(evaluator):
    rep = verify_pinned_relation(5, evaluator)
    assert rep["max_identity_error"] <= 1e-9
    assert rep["min_eigenvalue"] >= -1e-8


def test_tilde_quadratic_form_nonnegative(evaluator):
    win = local_covariance("tilde", 4, evaluator)
    rng = np.random.default_rng(6)
    for _ in range(100):
        v = rng.standard_normal(len(win.offsets))
        assert v @ win.matrix @ v >= -1e-8 * (v @ v)


def test_potential_kernel_log_asymptotics(evaluator):
    ev = PotentialKernelEvaluator(M=1024)
    consts = [ev((r, 0)) - G * math.log(r) for r in (8, 16, 32)]
    assert max(consts) - min(consts) < 0.01


def test_sampling_cap():
    from walklab.green import GreenOperator
    oversized = GreenOperator(n=FIELD_SAMPLING_CAP + 1, entries=np.eye(2))
    with pytest.raises(ParameterError):
        sample_dgff(oversized, 1, 1)


def test_export_csv(tmp_path, grid16):
    d, g = grid16
    path = tmp_path / "f.csv"
    export_samples_csv(sample_dgff(g, 1, 2), d, path, metadata="test meta")
    lines = path.read_text().splitlines()
    assert lines[0] == "# test meta"
    assert lines[1] == "x_i,x_j,value,replicate"
    assert len(lines) == 2 + 2 * d.n
