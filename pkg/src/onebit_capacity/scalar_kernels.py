"""Scalar special functions and 1-D quadrature.

Everything here is vectorized over numpy arrays. Tail-sensitive quantities
(the Q-function ratio in ``xi``) are evaluated through ``log_ndtr`` so that
nothing underflows to 0/0 for large arguments.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal, NamedTuple

import numpy as np
from scipy import integrate as _integrate
from scipy import special

from .exceptions import DomainError, QuadratureError

LN2 = math.log(2.0)
LOG2E = 1.0 / LN2
SQRT_2PI = math.sqrt(2.0 * math.pi)
LOG_2PI = math.log(2.0 * math.pi)
TWO_OVER_PI = 2.0 / math.pi
GLAISHER = 1.2824271291006226368753425688697917277676889273250011920637400217


def gaussian_pdf(t):
    """Standard normal density."""
    t = np.asarray(t, dtype=float)
    out = np.exp(-0.5 * t * t) / SQRT_2PI
    return out[()] if out.ndim == 0 else out


def q_function(x):
    """Gaussian tail probability ``P(S > x)``, accurate deep into both tails."""
    out = special.ndtr(-np.asarray(x, dtype=float))
    return out[()] if np.ndim(out) == 0 else out


def log_q_function(x):
    out = special.log_ndtr(-np.asarray(x, dtype=float))
    return out[()] if np.ndim(out) == 0 else out


def log_xi(s):
    """Natural log of ``phi(s)**2 / (Q(s) (1 - Q(s)))``."""
    s = np.asarray(s, dtype=float)
    out = -s * s - LOG_2PI - special.log_ndtr(s) - special.log_ndtr(-s)
    return out[()] if out.ndim == 0 else out


def xi(s):
    """Per-sample Fisher weight of a 1-bit observation of a Gaussian with mean ``s``.

    Even in ``s``, equal to 2/pi at the origin and decaying like ``|s| phi(s)``.
    """
    return np.exp(log_xi(s))


def eta(q):
    """Disagreement probability ``arccos(q) / pi`` of two signs with correlation ``q``."""
    q = np.asarray(q, dtype=float)
    if np.any(np.abs(q) > 1.0):
        raise DomainError("eta is defined for |q| <= 1")
    out = np.arccos(q) / math.pi
    return out[()] if out.ndim == 0 else out


def eta_prime(q):
    q = np.asarray(q, dtype=float)
    if np.any(np.abs(q) >= 1.0):
        raise DomainError("eta_prime is singular at |q| = 1 and undefined beyond")
    out = -1.0 / (math.pi * np.sqrt(1.0 - q * q))
    return out[()] if out.ndim == 0 else out


def log_gamma_fn(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("log_gamma_fn needs x > 0")
    out = special.gammaln(x)
    return out[()] if out.ndim == 0 else out


def log_vol_ball(n: int) -> float:
    """Natural log of the volume of the unit ``n``-ball."""
    if n < 1:
        raise DomainError("ball dimension must be >= 1")
    return 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0)


def vol_ball(n: int) -> float:
    return math.exp(log_vol_ball(n))


def log_vol_sphere(n_ambient: int) -> float:
    """Natural log of the surface area of the unit sphere in ``R**n_ambient``."""
    return math.log(n_ambient) + log_vol_ball(n_ambient)


def vol_sphere(n_ambient: int) -> float:
    return math.exp(log_vol_sphere(n_ambient))


def log_vol_ball_asymptotic(n: int) -> float:
    """Two-term large-``n`` expansion of ``log2 Vol(B_n)``."""
    return 0.5 * n * math.log2(2.0 * math.pi * math.e / n) - math.log2(math.sqrt(math.pi * n))


# --- quadrature -------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    kind: Literal["gauss-hermite", "adaptive-interval"] = "adaptive-interval"
    node_count: int = 128
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10

    def __post_init__(self):
        if self.kind not in ("gauss-hermite", "adaptive-interval"):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        if self.node_count < 2:
            raise ValueError("node_count must be >= 2")
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.kind == "adaptive-interval" and self.abs_tol == 0 and self.rel_tol == 0:
            raise ValueError("adaptive quadrature needs abs_tol or rel_tol > 0")


class QuadResult(NamedTuple):
    value: float
    error: float


GAUSS_HERMITE = QuadratureSpec("gauss-hermite", node_count=128)


@lru_cache(maxsize=None)
def hermite_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights with ``sum(w * f(x)) ~ E[f(S)]`` for standard normal ``S``."""
    x, w = special.roots_hermitenorm(n)
    w = w / SQRT_2PI
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def integrate(
    f: Callable,
    spec: QuadratureSpec = QuadratureSpec(),
    domain: tuple[float, float] | Literal["gaussian"] = "gaussian",
    max_subintervals: int = 500,
) -> QuadResult:
    """Integrate ``f`` over an interval, or take ``E[f(S)]`` for ``S ~ N(0, 1)``.

    The Gauss-Hermite kind requires ``domain="gaussian"``; its error is the
    difference from the rule with half as many nodes. The adaptive kind
    uses Gauss-Kronrod subdivision and raises ``QuadratureError`` when the
    subinterval budget runs out before the tolerance is met.
    """
    if spec.kind == "gauss-hermite":
        if domain != "gaussian":
            raise ValueError("gauss-hermite integrates against the standard normal weight")
        x, w = hermite_nodes(spec.node_count)
        value = float(np.sum(w * np.asarray(f(x), dtype=float)))
        xh, wh = hermite_nodes(max(2, spec.node_count // 2))
        coarse = float(np.sum(wh * np.asarray(f(xh), dtype=float)))
        return QuadResult(value, abs(value - coarse))

    if domain == "gaussian":
        a, b = -np.inf, np.inf
        g = lambda t: f(t) * math.exp(-0.5 * t * t) / SQRT_2PI
    else:
        a, b = domain
        g = f
    with warnings.catch_warnings():
        warnings.simplefilter("error", _integrate.IntegrationWarning)
        try:
            value, err = _integrate.quad(
                g, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=max_subintervals
            )
        except _integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from None
    return QuadResult(float(value), float(err))
