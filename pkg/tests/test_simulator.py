import math

import numpy as np
import pytest

from onebit_capacity.coherent import zeta
from onebit_capacity.covariance_space import input_from_q
from onebit_capacity.noncoherent_capacity import NoncoherentParams, capacity_lb_uniform, capacity_noncoherent_exact
from onebit_capacity.simulator import (
    ChannelBlock,
    RunManifest,
    Timer,
    disagreement_rates,
    estimate_q_hat,
    estimator_mse_sweep,
    fisher_coherent_mc,
    mi_exact_t2,
    mi_exact_t2_detail,
    mi_mc_t3,
    simulate_block,
)


def test_zero_input_gives_fair_signs():
    nr, T = 20_000, 3
    Y = simulate_block(np.zeros((3, T)), nr, seed=1).Y
    assert Y.dtype == np.int8 and Y.shape == (nr, T)
    assert abs(Y.mean()) < 4 / math.sqrt(nr * T)


def test_simulate_block_deterministic():
    X = input_from_q([0.3, 0.1, -0.2], 4.0)
    a = simulate_block(X, 150_000, seed=9, workers=1).Y
    b = simulate_block(X, 150_000, seed=9, workers=4).Y
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, simulate_block(X, 150_000, seed=10).Y)


def test_channel_block_validation():
    with pytest.raises(ValueError):
        ChannelBlock(np.zeros((2, 2)), np.zeros((3, 2)), 0, 1.0)
    with pytest.raises(ValueError):
        simulate_block(np.zeros(3), 10, seed=0)


def test_q_estimate_consistent():
    q = np.array([0.5, -0.3, 0.2])
    X = input_from_q(q, 9.0)
    Y = simulate_block(X, 200_000, seed=2).Y
    assert disagreement_rates(Y).shape == (3,)
    np.testing.assert_allclose(estimate_q_hat(Y), q, atol=0.02)


def test_estimator_mse_sweep_small():
    rows = estimator_mse_sweep(2, 0.5, [64, 256], trials=100, seed=3)
    assert len(rows) == 2
    assert rows[0]["pair"] == "1-2"
    assert all(r["passed"] for r in rows)
    assert rows[1]["mse"] < rows[0]["mse"]
    with pytest.raises(ValueError):
        estimator_mse_sweep(2, 0.5, [64], trials=10, seed=3)


def test_estimator_zero_gamma():
    rows = estimator_mse_sweep(3, 0.0, [128], trials=100, seed=4)
    assert all(r["passed"] for r in rows)


def test_mi_t2_zero_gamma():
    r = mi_exact_t2_detail(100, 0.0)
    assert r.bits == 0.0
    assert r.k_marginal.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("prior", ["jeffreys", "uniform"])
def test_mi_t2_marginal_symmetric(prior):
    r = mi_exact_t2_detail(301, 0.7, prior)
    assert r.k_marginal.sum() == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(r.k_marginal, r.k_marginal[::-1], atol=1e-12)


def test_mi_t2_increases_and_approaches_capacity():
    gamma = 0.5
    vals = [mi_exact_t2(n, gamma) for n in (64, 256, 1024, 4096)]
    assert np.all(np.diff(vals) > 0)
    # at large nr the per-block information is 2 * capacity plus o(1)
    cap = 2 * capacity_noncoherent_exact(NoncoherentParams.from_gamma(gamma, 2, 4096)).bits_per_use
    assert abs(vals[-1] - cap) < 0.1


def test_mi_t2_uniform_below_jeffreys():
    assert mi_exact_t2(1024, 0.5, "uniform") < mi_exact_t2(1024, 0.5, "jeffreys")


def test_mi_t2_quadrature_converged():
    a = mi_exact_t2(512, 0.8)
    b = mi_exact_t2(512, 0.8, quad_points=4096)
    assert a == pytest.approx(b, abs=1e-6)


def test_mi_mc_t3_small():
    est = mi_mc_t3(64, 0.5, n_outer=256, n_inner=256, seed=1)
    assert math.isfinite(est.value) and est.value > 0
    assert est.std_err > 0
    assert est == mi_mc_t3(64, 0.5, n_outer=256, n_inner=256, seed=1, workers=4)


def test_fisher_coherent_mc():
    x = np.array([1.0, 0.0])
    est = fisher_coherent_mc(x, 400_000, seed=5)
    expected = np.diag([zeta(2, 1.0), zeta(0, 1.0)])
    assert np.all(np.abs(est.value - expected) < 5 * est.std_err + 1e-12)


def test_manifest_roundtrip():
    m = RunManifest("bounds", {"T": 3, "gamma": 0.5}, seed=1, samples={"n": 10})
    m2 = RunManifest.from_dict(m.to_dict())
    assert m2.manifest_id == m.manifest_id and len(m.manifest_id) == 16
    # wall clock and output digest do not enter the id
    m2.wall_clock = 3.0
    m2.digest_outputs([{"a": 1}])
    assert m2.manifest_id == m.manifest_id
    assert RunManifest("bounds", {"T": 4, "gamma": 0.5}, seed=1).manifest_id != m.manifest_id


def test_timer():
    with Timer() as t:
        pass
    assert t.elapsed >= 0


@pytest.mark.parametrize("q", [np.array([0.4]), np.array([0.4, -0.2, 0.3])])
def test_pair_statistics_match_pmf(q):
    from onebit_capacity.orthant import pattern_index, pmf_t2, pmf_t3

    T = 2 if q.size == 1 else 3
    Y = simulate_block(input_from_q(q, 3.0), 1_000_000, seed=12).Y
    freq = np.bincount(pattern_index(Y), minlength=1 << T) / len(Y)
    exact = pmf_t2(q[0]) if T == 2 else pmf_t3(q)
    assert 0.5 * np.sum(np.abs(freq - exact)) < 0.005


def test_fisher_mc_symmetric_psd():
    est = fisher_coherent_mc([0.7, -0.4, 1.1], 100_000, seed=13)
    np.testing.assert_allclose(est.value, est.value.T, atol=1e-10)
    assert np.linalg.eigvalsh(est.value)[0] > -5 * np.max(est.std_err)


@pytest.mark.slow
def test_mi_mc_t3_within_bounds():
    gamma, nr = 0.5, 4096
    p = NoncoherentParams.from_gamma(gamma, 3, nr)
    lb = 3 * capacity_lb_uniform(p).bits_per_use
    ub = 3 * capacity_noncoherent_exact(p, n_samples=1_000_000, seed=0).bits_per_use + 0.3
    est = mi_mc_t3(nr, gamma, n_outer=2000, n_inner=4000, seed=0)
    assert math.isfinite(est.value)
    assert lb <= est.value <= ub
    assert abs(est.bias_diag) < 0.1
