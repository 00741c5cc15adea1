import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onebit_capacity.covariance_space import log_vol_Q_exact
from onebit_capacity.exceptions import DomainError, RegimeWarning, UnsupportedError
from onebit_capacity.noncoherent_capacity import (
    NoncoherentParams,
    alpha_t2,
    alpha_t3,
    capacity_large_T_window,
    capacity_lb_indep,
    capacity_lb_uniform,
    capacity_low_snr,
    capacity_noncoherent_exact,
    capacity_ub_genie,
    lb_uniform_asymptotic,
    sum_log_gamma,
    sum_log_gamma_asymptotic,
)

# mpmath oracles
ALPHA_T2_HALF = 0.679673818908243874
SLG = {2: 0.825748064736159399, 60: -16.4068629557042436, 200: -141.025021095318824}
CAP_T2 = 1.69790943554231742  # gamma = 0.5, nr = 4096
LB_T2 = 1.47263223756088240  # gamma = 0.5, nr = 1e4


def P(gamma, T, nr):
    return NoncoherentParams.from_gamma(gamma, T, nr)


def test_params():
    p = NoncoherentParams(1.0, 3, 100)
    assert p.nt == 3 and p.gamma == 0.5
    with pytest.raises(ValueError):
        NoncoherentParams(1.0, 3, 100, nt=2)
    with pytest.raises(ValueError):
        NoncoherentParams(1.0, 1, 100)


def test_alpha_t2():
    assert alpha_t2(0.5) == pytest.approx(ALPHA_T2_HALF, rel=1e-13)
    assert alpha_t2(0.0) == pytest.approx(0.0, abs=1e-15)
    g = np.linspace(0.01, 0.99, 50)
    assert np.all(np.diff(alpha_t2(g)) > 0)
    # small gamma: alpha ~ 4 gamma / pi from above
    assert alpha_t2(1e-4) == pytest.approx(4e-4 / math.pi, rel=1e-6)
    assert np.all(alpha_t2(g) >= 4 * g / math.pi)
    with pytest.raises(DomainError):
        alpha_t2(1.0)


def test_alpha_t3_small_gamma():
    # leading order: (2/pi)^3 Vol(Q_gamma)
    g = 0.05
    est = alpha_t3(g, 200_000, seed=1)
    lead = (2 / math.pi) ** 3 * math.exp(log_vol_Q_exact(3, g))
    assert est.value == pytest.approx(lead, rel=0.01)
    assert est.std_err > 0


def test_alpha_t3_warns_near_one():
    with pytest.warns(RegimeWarning):
        alpha_t3(0.97, 2000, seed=0)


def test_capacity_exact_t2_golden():
    c = capacity_noncoherent_exact(P(0.5, 2, 4096))
    assert c.bits_per_use == pytest.approx(CAP_T2, abs=1e-12)
    assert c.std_err is None
    assert c.extra["alpha"] == pytest.approx(ALPHA_T2_HALF)


def test_capacity_exact_t3():
    c = capacity_noncoherent_exact(P(0.5, 3, 4096), n_samples=100_000, seed=2)
    assert c.std_err is not None and 0 < c.std_err < 0.01
    lb = capacity_lb_uniform(P(0.5, 3, 4096)).bits_per_use
    ub = capacity_ub_genie(P(0.5, 3, 4096)).bits_per_use
    assert lb < c.bits_per_use < ub


def test_capacity_exact_unsupported():
    with pytest.raises(UnsupportedError, match="lb-uniform"):
        capacity_noncoherent_exact(P(0.5, 4, 4096))


def test_lb_uniform_golden():
    lb = capacity_lb_uniform(P(0.5, 2, 1e4))
    assert lb.bits_per_use == pytest.approx(LB_T2, abs=1e-12)
    assert lb.method == "bound-lb"


def test_lb_indep():
    p = P(0.5, 2, 4096)
    assert capacity_lb_indep(p, "exact").bits_per_use == pytest.approx(CAP_T2, abs=1e-12)
    for T in (2, 3, 6):
        q = P(0.7, T, 1e4)
        assert capacity_lb_indep(q, "closed").bits_per_use <= capacity_lb_indep(q, "exact").bits_per_use
    with pytest.raises(ValueError):
        capacity_lb_indep(p, "other")


def test_sum_log_gamma():
    for T, v in SLG.items():
        assert sum_log_gamma(T) == pytest.approx(v, rel=1e-13)
    gaps = [abs(sum_log_gamma(T) - sum_log_gamma_asymptotic(T)) for T in (20, 60, 200)]
    assert gaps[0] > gaps[1] > gaps[2]


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 0.95), st.integers(2, 8), st.floats(1e2, 1e7))
def test_bounds_ordered_and_scale(gamma, T, nr):
    p = P(gamma, T, nr)
    lb = capacity_lb_uniform(p)
    ub = capacity_ub_genie(p)
    assert lb.bits_per_use < ub.bits_per_use
    for c in (lb, ub):
        assert c.bits_per_use == pytest.approx(sum(c.terms.values()), abs=1e-10)
    d = capacity_lb_uniform(P(gamma, T, 2 * nr)).bits_per_use - lb.bits_per_use
    assert d == pytest.approx((T - 1) / 4, abs=1e-10)


def test_exact_between_bounds_t2():
    for g in (0.1, 0.5, 0.9):
        p = P(g, 2, 1e5)
        c = capacity_noncoherent_exact(p).bits_per_use
        assert capacity_lb_uniform(p).bits_per_use < c < capacity_ub_genie(p).bits_per_use


def test_low_snr_forms():
    p = P(0.05, 3, 1e6)
    stated = capacity_low_snr(p, "as-stated")
    assert stated.bits_per_use == capacity_lb_uniform(p).bits_per_use
    corrected = capacity_low_snr(p)
    assert corrected.bits_per_use - stated.bits_per_use == pytest.approx(1.0, abs=1e-12)
    exact = capacity_noncoherent_exact(p, n_samples=200_000, seed=3).bits_per_use
    assert corrected.bits_per_use == pytest.approx(exact, abs=0.01)
    with pytest.warns(RegimeWarning):
        capacity_low_snr(P(0.5, 3, 1e6))


def test_low_snr_matches_t2_exact():
    p = P(0.01, 2, 1e6)
    assert capacity_low_snr(p).bits_per_use == pytest.approx(capacity_noncoherent_exact(p).bits_per_use, abs=1e-4)


def test_large_T_window():
    p = P(0.8, 60, 1e8)
    lb, ub = capacity_large_T_window(p)
    assert lb < ub
    assert lb == pytest.approx(capacity_lb_uniform(p).bits_per_use, abs=0.1)
    assert ub == pytest.approx(capacity_ub_genie(p).bits_per_use, abs=0.1)
    with pytest.warns(RegimeWarning):
        capacity_large_T_window(P(0.8, 5, 1e8))


def test_lb_uniform_asymptotic():
    p = P(0.8, 60, 1e8)
    assert lb_uniform_asymptotic(p) == pytest.approx(capacity_lb_uniform(p).bits_per_use, abs=0.01)


def test_nats_conversion():
    c = capacity_lb_uniform(P(0.5, 3, 1e4))
    assert c.in_nats().bits_per_use == pytest.approx(c.bits_per_use * math.log(2))
