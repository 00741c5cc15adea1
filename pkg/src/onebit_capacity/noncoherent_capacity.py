"""Non-coherent block-fading channel: capacity for short blocks and bounds for any ``T``.

Every capacity has the form ``(T-1)/4 log2(nr / 2 pi e) + (constant)`` in
bits per channel use. The breakdown keeps the ``nr`` dependence in
``dimension_term``; ``alpha_term`` and ``volume_term`` hold the rest.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import special

from . import mc
from .coherent import zeta
from .covariance_space import uniform_q_batch, gamma_from_snr, log_vol_Q_asymptotic, log_vol_Q_exact, snr_from_gamma
from .exceptions import DomainError, RegimeWarning, UnsupportedError
from .orthant import mu_t3
from .results import CapacityEstimate, MCEstimate
from .scalar_kernels import LOG2E

DEFAULT_SAMPLES = 1_000_000
BOUND_METHODS = ("lb-uniform", "lb-indep", "ub-genie", "large-t")


@dataclass(frozen=True)
class NoncoherentParams:
    snr: float
    T: int
    nr: float
    nt: int | None = None

    def __post_init__(self):
        if not self.snr > 0 or not math.isfinite(self.snr):
            raise ValueError("snr must be positive and finite")
        if int(self.T) != self.T or self.T < 2:
            raise ValueError("T must be an integer >= 2")
        if not self.nr >= 1:
            raise ValueError("nr must be >= 1")
        if self.nt is None:
            object.__setattr__(self, "nt", int(self.T))
        elif self.nt < self.T:
            raise ValueError("nt must be >= T")

    @classmethod
    def from_gamma(cls, gamma: float, T: int, nr: float, nt: int | None = None) -> "NoncoherentParams":
        return cls(snr_from_gamma(gamma), T, nr, nt)

    @property
    def gamma(self) -> float:
        return gamma_from_snr(self.snr)


def _dimension_bits(T: int, nr: float) -> float:
    return 0.25 * (T - 1) * math.log2(nr / (2.0 * math.pi * math.e))


# --- alpha constants ---------------------------------------------------------------


def alpha_t2(gamma):
    """Integral of the Jeffreys density for ``T = 2``: ``4 arccos(sqrt(mu_min)) - pi``.

    ``mu_min = arccos(gamma) / pi`` is the smallest reachable disagreement
    probability.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any((g < 0) | (g >= 1)):
        raise DomainError("gamma must lie in [0, 1)")
    mu_min = np.arccos(g) / math.pi
    out = 4.0 * np.arccos(np.sqrt(mu_min)) - math.pi
    return out[()] if out.ndim == 0 else out


def _alpha_t3_integrand(q: np.ndarray) -> np.ndarray:
    # sqrt(det J) in the q coordinates: prod mu^(-1/2) times the Jacobian
    # |det dmu/dq| = (1/2) prod |eta'(q_i)|
    mu = mu_t3(q)
    with np.errstate(divide="ignore"):
        log_val = (
            -0.5 * np.sum(np.log(mu), axis=-1)
            - 0.5 * np.sum(np.log1p(-q * q), axis=-1)
            - math.log(2.0)
            - 3.0 * math.log(math.pi)
        )
    return np.exp(log_val)


def alpha_t3(gamma: float, n_samples: int = DEFAULT_SAMPLES, seed: int = 0, workers: int | None = None) -> MCEstimate:
    """Monte Carlo ``int_{Q_gamma} sqrt(det J(q)) dq`` for ``T = 3`` over uniform ``q``."""
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    if gamma > 0.95:
        warnings.warn(
            f"alpha_t3 integrand is nearly singular at gamma = {gamma:g}; expect a large std_err",
            RegimeWarning,
            stacklevel=2,
        )
    vol = math.exp(log_vol_Q_exact(3, gamma))
    est = mc.mc_mean(
        lambda rng, m: _alpha_t3_integrand(uniform_q_batch(rng, 3, gamma, m)),
        n_samples,
        seed,
        mc.STREAM_ALPHA_T3,
        workers,
    )
    return MCEstimate(vol * est.value, vol * est.std_err)


# --- capacity and bounds -------------------------------------------------------------


def capacity_noncoherent_exact(
    params: NoncoherentParams,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    workers: int | None = None,
) -> CapacityEstimate:
    """Asymptotic capacity for ``T`` in ``{2, 3}``; ``std_err`` is set when alpha is Monte Carlo."""
    T = params.T
    if T == 2:
        alpha = float(alpha_t2(params.gamma))
        se = None
        alpha_bits = 0.5 * math.log2(alpha)
    elif T == 3:
        est = alpha_t3(params.gamma, n_samples, seed, workers)
        alpha = est.value
        alpha_bits = math.log2(alpha) / 3.0
        se = est.std_err / (alpha * 3.0) * LOG2E
    else:
        raise UnsupportedError(
            f"exact capacity is only available for T in {{2, 3}}, got T={T}; "
            f"use a bound method: {', '.join(BOUND_METHODS)}"
        )
    out = CapacityEstimate.from_terms(
        "exact-asymptotic",
        std_err=se,
        dimension_term=_dimension_bits(T, params.nr),
        alpha_term=alpha_bits,
    )
    out.extra["alpha"] = alpha
    return out


def capacity_lb_uniform(params: NoncoherentParams) -> CapacityEstimate:
    """Lower bound from ``q`` uniform on ``Q_gamma``."""
    T = params.T
    return CapacityEstimate.from_terms(
        "bound-lb",
        dimension_term=_dimension_bits(T, params.nr),
        alpha_term=0.25 * (T - 1) * math.log2(params.gamma**2 / math.pi**2),
        volume_term=log_vol_Q_exact(T, 1.0) * LOG2E / T,
    )


def capacity_lb_indep(params: NoncoherentParams, form: Literal["closed", "exact"] = "closed") -> CapacityEstimate:
    """Lower bound from i.i.d. Jeffreys-distributed pair correlations on ``|q_i| <= gamma/(T-1)``.

    ``exact`` keeps ``alpha_t2(gamma / (T-1))`` for each of the ``T(T-1)/2``
    pairs; ``closed`` replaces it by its lower bound ``4 gamma / (pi (T-1))``.
    """
    T = params.T
    g = params.gamma / (T - 1)
    if form == "exact":
        alpha_bits = 0.5 * (T - 1) * math.log2(float(alpha_t2(g)))
    elif form == "closed":
        alpha_bits = 0.5 * (T - 1) * math.log2(4.0 * g / math.pi)
    else:
        raise ValueError(f"unknown form {form!r}")
    out = CapacityEstimate.from_terms("bound-lb", dimension_term=_dimension_bits(T, params.nr), alpha_term=alpha_bits)
    out.extra["form"] = form
    return out


def sum_log_gamma(T: int) -> float:
    """``(1/T) sum_{i=2}^{T} log2(pi**(i/2) / Gamma(i/2))``."""
    if T < 2:
        raise DomainError("T must be >= 2")
    i = np.arange(2, T + 1)
    return float(np.sum(0.5 * i * math.log(math.pi) - special.gammaln(0.5 * i))) * LOG2E / T


def sum_log_gamma_asymptotic(T: int) -> float:
    if T < 2:
        raise DomainError("T must be >= 2")
    return 0.25 * (T - 1) * math.log2(2.0 * math.pi * math.e**1.5 / T) + math.log2(math.e / 16.0) / 8.0


def capacity_ub_genie(params: NoncoherentParams) -> CapacityEstimate:
    """Upper bound from revealing the channel to the receiver with spherical inputs."""
    T = params.T
    z0 = float(zeta(0, math.sqrt(params.snr)))
    return CapacityEstimate.from_terms(
        "bound-ub",
        dimension_term=_dimension_bits(T, params.nr),
        alpha_term=0.25 * (T - 1) * math.log2(params.snr * z0),
        volume_term=sum_log_gamma(T),
    )


def capacity_low_snr(params: NoncoherentParams, form: Literal["corrected", "as-stated"] = "corrected") -> CapacityEstimate:
    """Small-``snr`` capacity from the Fisher expansion ``sqrt(det J) = (2/pi)**m (1 + O(gamma**2))``.

    Integrating the leading term over ``Q_gamma`` gives ``alpha ~ (2 gamma/pi)**m Vol(Q_1)``
    with ``m = T(T-1)/2``. ``as-stated`` reproduces the uniform lower bound
    instead, which is smaller by ``(T-1)/2`` bits.
    """
    T = params.T
    g = params.gamma
    if g > 0.2:
        warnings.warn(f"low-snr capacity used at gamma = {g:.3g}", RegimeWarning, stacklevel=2)
    if form == "as-stated":
        lb = capacity_lb_uniform(params)
        out = CapacityEstimate.from_terms("low-snr", **lb.terms)
    elif form == "corrected":
        out = CapacityEstimate.from_terms(
            "low-snr",
            dimension_term=_dimension_bits(T, params.nr),
            alpha_term=0.5 * (T - 1) * math.log2(2.0 * g / math.pi),
            volume_term=log_vol_Q_exact(T, 1.0) * LOG2E / T,
        )
    else:
        raise ValueError(f"unknown form {form!r}")
    out.extra["form"] = form
    return out


def capacity_large_T_window(params: NoncoherentParams) -> tuple[float, float]:
    """``(lb, ub)`` in bits per use, both using large-``T`` expansions of their constant terms."""
    T = params.T
    if T < 10:
        warnings.warn(f"large-T window used at T = {T}", RegimeWarning, stacklevel=2)
    g = params.gamma
    nr = params.nr
    lb = 0.25 * (T - 1) * math.log2(g * g * nr / (math.pi**2 * math.sqrt(math.e) * T)) - LOG2E / 8.0
    z0 = float(zeta(0, math.sqrt(params.snr)))
    ub = 0.25 * (T - 1) * math.log2(params.snr * z0 * math.sqrt(math.e) * nr / T) + math.log2(math.e / 16.0) / 8.0
    if lb > ub:
        raise AssertionError(f"large-T window is empty: lb={lb} > ub={ub}")
    return lb, ub


def lb_uniform_asymptotic(params: NoncoherentParams) -> float:
    """Uniform lower bound with ``log Vol(Q_1)`` replaced by its coarse expansion."""
    T = params.T
    return (
        _dimension_bits(T, params.nr)
        + 0.25 * (T - 1) * math.log2(params.gamma**2 / math.pi**2)
        + log_vol_Q_asymptotic(T, "coarse") / T
    )
