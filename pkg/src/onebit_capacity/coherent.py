"""Coherent channel: Fisher information, asymptotic capacity and its regimes.

With the channel known at the receiver, one receive antenna observes
``y = sign(h.x + z)``. The Fisher information of ``x`` has determinant
``zeta0(|x|)**(nt-1) * zeta2(|x|)`` and the capacity for many receive
antennas is

    (nt/2) log2(nr / 2 pi e) + log2 Vol(B_nt) + log2 alpha(snr, nt)

where ``alpha`` integrates the square root of that determinant radially.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy import integrate as _integrate
from scipy.interpolate import PchipInterpolator

from . import mc
from .exceptions import DomainError, QuadratureError, RegimeWarning
from .results import CapacityEstimate
from .scalar_kernels import (
    LOG2E,
    SQRT_2PI,
    hermite_nodes,
    log_vol_ball,
    log_vol_sphere,
    log_xi,
    xi,
)

ZETA_NODES = 128
CDF_KNOTS = 4096


@dataclass(frozen=True)
class CoherentParams:
    snr: float
    nt: int
    nr: float

    def __post_init__(self):
        if not self.snr > 0 or not math.isfinite(self.snr):
            raise ValueError("snr must be positive and finite")
        if int(self.nt) != self.nt or self.nt < 1:
            raise ValueError("nt must be a positive integer")
        if not self.nr >= 1:
            raise ValueError("nr must be >= 1")


# --- zeta integrals ---------------------------------------------------------


def zeta(k: int, t):
    """``E[S**k xi(t S)]`` for standard normal ``S``.

    Gauss-Hermite in ``S`` for ``t <= 1``. For larger ``t`` the integrand
    narrows like ``1/t``, so the rule is applied in ``u = t S`` instead,
    where ``xi(u) exp(u**2/2)`` is smooth and slowly growing.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("zeta needs t >= 0")
    x, w = hermite_nodes(ZETA_NODES)
    tt = t[..., None]
    small = np.sum(w * x**k * xi(np.minimum(tt, 1.0) * x), axis=-1)
    big_t = np.maximum(tt, 1.0)
    # xi(u) / phi(u) is smooth; E_u[.] then carries the phi(u/t)/t change of variables
    smooth = np.exp(log_xi(x) + 0.5 * x * x) * SQRT_2PI
    big = np.sum(w * smooth * (x / big_t) ** k * np.exp(-0.5 * (x / big_t) ** 2) / SQRT_2PI / big_t, axis=-1)
    out = np.where(t <= 1.0, small, big)
    return out[()] if out.ndim == 0 else out


@lru_cache(maxsize=1)
def a_constants() -> tuple[float, float]:
    """``A0 = E-less integral of xi / sqrt(2 pi)`` and ``A2`` (with ``u**2``).

    These fix the large-``t`` tails ``zeta0(t) ~ A0/t`` and
    ``zeta2(t) ~ A2/t**3``.
    """
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
    a0 = 2.0 * _integrate.quad(xi, 0.0, np.inf, **opts)[0] / SQRT_2PI
    a2 = 2.0 * _integrate.quad(lambda u: u * u * xi(u), 0.0, np.inf, **opts)[0] / SQRT_2PI
    return a0, a2


def log_fisher_det_coherent(r, nt: int):
    r = np.asarray(r, dtype=float)
    return (nt - 1) * np.log(zeta(0, r)) + np.log(zeta(2, r))


def fisher_det_coherent(r, nt: int):
    """Determinant of the Fisher information of ``x`` at ``|x| = r``."""
    return np.exp(log_fisher_det_coherent(r, nt))


# --- alpha ------------------------------------------------------------------


def _log_radial(r, nt: int):
    """Log of ``sqrt(det J) * nt * r**(nt-1)``, the radial integrand of alpha."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return 0.5 * log_fisher_det_coherent(r, nt) + math.log(nt) + (nt - 1) * np.log(r)


def _quad(f, a, b, rel_tol):
    with warnings.catch_warnings():
        warnings.simplefilter("error", _integrate.IntegrationWarning)
        try:
            return _integrate.quad(f, a, b, epsabs=0.0, epsrel=rel_tol, limit=1000)[0]
        except _integrate.IntegrationWarning as exc:
            raise QuadratureError(f"alpha integral did not converge: {exc}") from None


def log_alpha_coherent(snr: float, nt: int, rel_tol: float = 1e-10) -> float:
    """Natural log of ``alpha(snr, nt)``, scaled internally so large ``nt`` cannot overflow."""
    if not snr > 0:
        raise DomainError("snr must be positive")
    R = math.sqrt(snr)
    grid = np.linspace(0.0, R, 257)[1:]
    shift = float(np.max(_log_radial(grid, nt)))

    def f(r):
        if r <= 0.0:
            return math.sqrt(zeta(2, 0.0)) if nt == 1 else 0.0
        return math.exp(float(_log_radial(r, nt)) - shift)

    total = _quad(f, 0.0, min(R, 1.0), rel_tol)
    if R > 1.0:
        # log-radius substitution keeps the ~1/r tails cheap for large snr
        total += _quad(lambda u: f(math.exp(u)) * math.exp(u), 0.0, math.log(R), rel_tol)
    return math.log(total) + shift


def alpha_coherent(snr: float, nt: int, rel_tol: float = 1e-10) -> float:
    return math.exp(log_alpha_coherent(snr, nt, rel_tol))


@lru_cache(maxsize=1)
def sqrt_zeta2_integral() -> float:
    """``int_0^inf sqrt(zeta2(r)) dr``, the high-SNR limit of alpha for one antenna."""
    cut = 1.0e4
    head = _quad(lambda r: math.sqrt(zeta(2, r)), 0.0, 1.0, 1e-12)
    mid = _quad(lambda u: math.sqrt(zeta(2, math.exp(u))) * math.exp(u), 0.0, math.log(cut), 1e-12)
    # zeta2(r) = A2/r**3 (1 + O(1/r**2)) beyond the cut
    tail = 2.0 * math.sqrt(a_constants()[1] / cut)
    return head + mid + tail


def zeta0_derivative(r: float, h: float | None = None) -> float:
    """Central difference of ``zeta0`` with step ``1e-5 * max(1, r)``."""
    if h is None:
        h = 1e-5 * max(1.0, r)
    lo = max(r - h, 0.0)
    return float((zeta(0, r + h) - zeta(0, lo)) / (r + h - lo))


Regime = Literal["low-snr", "high-snr", "large-nt"]


def log_alpha_asymptotic(snr: float, nt: int, regime: Regime) -> float:
    """Natural log of the closed-form equivalent of alpha in ``regime``."""
    if regime == "low-snr":
        if nt * snr > 0.1:
            warnings.warn(f"low-snr equivalent used at nt*snr = {nt * snr:g}", RegimeWarning, stacklevel=2)
        return 0.5 * nt * math.log(2.0 * snr / math.pi)
    if regime == "high-snr":
        if snr / nt < 100.0:
            warnings.warn(f"high-snr equivalent used at snr/nt = {snr / nt:g}", RegimeWarning, stacklevel=2)
        a0, a2 = a_constants()
        if nt == 1:
            return math.log(sqrt_zeta2_integral())
        if nt == 2:
            return 0.5 * math.log(a0 * a2) + math.log(math.log(snr))
        return (
            math.log(2.0 * nt / (nt - 2))
            + 0.5 * (nt - 1) * math.log(a0)
            + 0.5 * math.log(a2)
            + 0.25 * (nt - 2) * math.log(snr)
        )
    if regime == "large-nt":
        if nt < 10:
            warnings.warn(f"large-nt equivalent used at nt = {nt}", RegimeWarning, stacklevel=2)
        R = math.sqrt(snr)
        z0 = float(zeta(0, R))
        z2 = float(zeta(2, R))
        dz0 = zeta0_derivative(R)
        return 0.5 * math.log(z0 * z2) - math.log(z0 + 0.5 * R * dz0) + 0.5 * nt * math.log(snr * z0)
    raise ValueError(f"unknown regime {regime!r}")


def alpha_asymptotic(snr: float, nt: int, regime: Regime) -> float:
    return math.exp(log_alpha_asymptotic(snr, nt, regime))


# --- capacity ---------------------------------------------------------------


def _dimension_bits(dim: float, nr: float) -> float:
    return 0.5 * dim * math.log2(nr / (2.0 * math.pi * math.e))


def capacity_coherent(params: CoherentParams, regime: Regime | None = None) -> CapacityEstimate:
    """Asymptotic coherent capacity in bits per channel use.

    With ``regime`` set, alpha is replaced by its closed-form equivalent.
    """
    if regime is None:
        log_alpha = log_alpha_coherent(params.snr, params.nt)
        method = "exact-asymptotic"
    else:
        log_alpha = log_alpha_asymptotic(params.snr, params.nt, regime)
        method = regime
    return CapacityEstimate.from_terms(
        method,
        dimension_term=_dimension_bits(params.nt, params.nr),
        volume_term=log_vol_ball(params.nt) * LOG2E,
        alpha_term=log_alpha * LOG2E,
    )


def fisher_det_spherical(x_tilde, snr: float, nt: int) -> float:
    """Fisher determinant for inputs on the sphere of radius sqrt(snr).

    The point is parameterized by its first ``nt - 1`` coordinates.
    """
    x_tilde = np.asarray(x_tilde, dtype=float).reshape(-1)
    if x_tilde.size != nt - 1:
        raise ValueError(f"x_tilde must have {nt - 1} entries")
    s = float(x_tilde @ x_tilde) / snr
    if s >= 1.0:
        raise DomainError("x_tilde must lie strictly inside the ball of radius sqrt(snr)")
    return float(zeta(0, math.sqrt(snr))) ** (nt - 1) / (1.0 - s)


def capacity_coherent_spherical(params: CoherentParams) -> CapacityEstimate:
    """Asymptotic coherent capacity when inputs are confined to the sphere of radius sqrt(snr)."""
    nt = params.nt
    if nt < 2:
        raise ValueError("spherical inputs need nt >= 2")
    z0 = float(zeta(0, math.sqrt(params.snr)))
    return CapacityEstimate.from_terms(
        "spherical",
        dimension_term=_dimension_bits(nt - 1, params.nr),
        volume_term=log_vol_sphere(nt) * LOG2E - 1.0,
        alpha_term=0.5 * (nt - 1) * math.log2(params.snr * z0),
    )


# --- optimal input ------------------------------------------------------------


@lru_cache(maxsize=64)
def radial_table(snr: float, nt: int, knots: int = CDF_KNOTS) -> PchipInterpolator:
    """Inverse CDF of the optimal input radius on ``[0, sqrt(snr)]``."""
    r = np.linspace(0.0, math.sqrt(snr), knots)
    logp = np.full_like(r, -np.inf)
    logp[1:] = _log_radial(r[1:], nt)
    if nt == 1:
        logp[0] = 0.5 * math.log(float(zeta(2, 0.0)))
    p = np.exp(logp - np.max(logp))
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(r))])
    cdf /= cdf[-1]
    cdf, keep = np.unique(cdf, return_index=True)
    return PchipInterpolator(cdf, r[keep])


def sample_optimal_coherent_input(snr: float, nt: int, seed, size: int | None = None) -> np.ndarray:
    """Draw from the capacity-achieving coherent input: isotropic, radius from the table."""
    rng = seed if isinstance(seed, np.random.Generator) else mc.rng_for(seed, mc.STREAM_COHERENT_INPUT)
    n = 1 if size is None else int(size)
    g = rng.standard_normal((n, nt))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radius = np.clip(radial_table(float(snr), int(nt))(rng.random(n)), 0.0, math.sqrt(snr))
    x = g * radius[:, None]
    return x[0] if size is None else x
