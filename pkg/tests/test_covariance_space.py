import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from onebit_capacity.covariance_space import (
    SnrContext,
    T_from_len,
    chol_upper,
    gamma_from_snr,
    input_from_q,
    is_member,
    log_vol_Q_asymptotic,
    log_vol_Q_exact,
    n_pairs,
    offdiag,
    pair_index,
    pairs,
    rho_of_x,
    sample_uniform_Q,
    sigma_of_q,
    snr_from_gamma,
    uniform_q_batch,
    vol_Q_exact,
    vol_Q_mc,
)
from onebit_capacity.exceptions import DomainError

# mpmath oracles
VOL_T5 = 22.5325592244211977
LOG2_VOL_T60 = -2253.44799216149650


def test_gamma_snr_roundtrip():
    assert gamma_from_snr(1.0) == 0.5
    assert snr_from_gamma(gamma_from_snr(3.7)) == pytest.approx(3.7, rel=1e-14)
    assert SnrContext(4.0).gamma == pytest.approx(0.8)
    with pytest.raises(DomainError):
        gamma_from_snr(0.0)
    with pytest.raises(DomainError):
        snr_from_gamma(1.0)


def test_pair_indexing():
    assert pairs(3) == ((0, 1), (0, 2), (1, 2))
    for T in range(2, 8):
        for k, (i, j) in enumerate(pairs(T)):
            assert pair_index(i, j, T) == k
            assert pair_index(j, i, T) == k
        assert T_from_len(n_pairs(T)) == T
    with pytest.raises(ValueError):
        T_from_len(4)
    with pytest.raises(IndexError):
        pair_index(0, 3, 3)


def test_sigma_and_offdiag_roundtrip():
    q = np.array([0.1, -0.2, 0.3])
    S = sigma_of_q(q)
    assert S.shape == (3, 3)
    np.testing.assert_array_equal(np.diag(S), 1.0)
    assert S[0, 2] == S[2, 0] == -0.2
    np.testing.assert_array_equal(offdiag(S), q)
    batch = sigma_of_q(np.zeros((5, 6)))
    assert batch.shape == (5, 4, 4)


def test_membership_examples():
    assert is_member([0.0], 0.5)
    assert is_member([0.5], 0.5)
    assert not is_member([0.6], 0.5)
    # three pairwise anti-correlations of -0.6 cannot coexist
    assert not is_member([-0.6, -0.6, -0.6], 1.0)
    assert is_member([-0.5, -0.5, -0.5], 1.0)


@pytest.mark.parametrize("T", [2, 3, 4, 5, 6])
def test_membership_methods_agree(T):
    rng = np.random.default_rng(T)
    q = rng.uniform(-1.0, 1.0, size=(10_000, n_pairs(T)))
    gamma = 0.9
    a = is_member(q, gamma, "eig")
    b = is_member(q, gamma, "chol")
    lam = np.linalg.eigvalsh(sigma_of_q(q))[:, 0] - (1 - gamma)
    decisive = np.abs(lam) > 1e-8
    np.testing.assert_array_equal(a[decisive], b[decisive])
    assert a.any() and not a.all()


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-1, 1), min_size=3, max_size=3),
    st.floats(0.05, 1.0),
    st.floats(0.0, 0.95),
)
def test_membership_monotone_in_gamma(q, g_hi, frac):
    g_lo = g_hi * frac
    if g_lo > 0 and is_member(q, g_lo):
        assert is_member(q, g_hi)


def test_chol_upper():
    M = sigma_of_q([0.3, 0.2, -0.1])
    U = chol_upper(M)
    np.testing.assert_allclose(U.T @ U, M, atol=1e-14)
    assert np.allclose(U, np.triu(U))
    # singular boundary point: all-ones correlation
    B = sigma_of_q([1.0, 1.0, 1.0])
    Ub = chol_upper(B)
    np.testing.assert_allclose(np.sum(Ub * Ub, axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(Ub.T @ Ub, B, atol=1e-5)
    with pytest.raises(DomainError):
        chol_upper(sigma_of_q([0.9, -0.9, 0.9]))


def test_input_from_q_roundtrip():
    snr = 4.0
    gamma = gamma_from_snr(snr)
    rng = np.random.default_rng(0)
    q = sample_uniform_Q(4, gamma, rng, size=1000)
    for row in q:
        X = input_from_q(row, snr)
        np.testing.assert_allclose(rho_of_x(X), row, atol=1e-10)
        np.testing.assert_allclose(np.sum(X * X, axis=0), snr, rtol=1e-12)
    X = input_from_q(q[0], snr, nt=6)
    assert X.shape == (6, 4)
    with pytest.raises(DomainError):
        input_from_q([0.9], 1.0)


def test_vol_exact_closed_forms():
    assert vol_Q_exact(2) == pytest.approx(2.0, rel=1e-14)
    assert vol_Q_exact(3) == pytest.approx(math.pi**2 / 2, rel=1e-14)
    assert vol_Q_exact(4) == pytest.approx(32 * math.pi**2 / 27, rel=1e-14)
    assert vol_Q_exact(5) == pytest.approx(VOL_T5, rel=1e-13)
    assert log_vol_Q_exact(60) / math.log(2) == pytest.approx(LOG2_VOL_T60, rel=1e-13)
    assert vol_Q_exact(4, 0.5) == pytest.approx(vol_Q_exact(4) * 0.5**6, rel=1e-14)


def test_vol_mc_matches_exact():
    est = vol_Q_mc(3, 1.0, 200_000, seed=1)
    assert abs(est.value - vol_Q_exact(3)) < 4 * est.std_err
    with pytest.raises(ValueError):
        vol_Q_mc(3, 1.0, 10, seed=1)


def test_vol_asymptotic_fine_and_coarse():
    exact = log_vol_Q_exact(60) / math.log(2)
    assert log_vol_Q_asymptotic(60, "fine") == pytest.approx(exact, abs=0.01)
    gaps = [abs(log_vol_Q_asymptotic(T, "coarse") - log_vol_Q_exact(T) / math.log(2)) for T in (20, 40, 60)]
    assert gaps[0] > gaps[1] > gaps[2]
    fine = [abs(log_vol_Q_asymptotic(T, "fine") - log_vol_Q_exact(T) / math.log(2)) for T in (10, 20, 40)]
    assert fine[0] > fine[1] > fine[2]


def test_uniform_sampler_in_set():
    q = sample_uniform_Q(5, 0.8, seed=2, size=5000)
    assert q.shape == (5000, 10)
    assert np.all(is_member(q, 0.8, tol=1e-9))
    assert sample_uniform_Q(3, 0.8, seed=2).shape == (3,)


def test_uniform_sampler_matches_rejection():
    T, gamma = 3, 0.8
    rng = np.random.default_rng(5)
    direct = uniform_q_batch(rng, T, gamma, 40_000)[:, 0]
    box = rng.uniform(-gamma, gamma, size=(120_000, 3))
    rej = box[is_member(box, gamma)][:, 0]
    se = math.sqrt(np.var(direct**2) / len(direct) + np.var(rej**2) / len(rej))
    assert abs(np.mean(direct**2) - np.mean(rej**2)) < 4 * se
    assert stats.ks_2samp(direct, rej).pvalue > 0.001


def test_uniform_sampler_degenerate_gamma():
    np.testing.assert_array_equal(sample_uniform_Q(3, 0.0, seed=0, size=4), 0.0)
