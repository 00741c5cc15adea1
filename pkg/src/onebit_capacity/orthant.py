"""Sign-pattern distributions of the non-coherent channel output.

One receive antenna sees ``y = sign(z)`` with ``z ~ N(0, Sigma(q))``. A
pattern ``y in {-1, +1}**T`` is stored at index ``sum_k b_k 2**k`` with
``b_k = 1`` iff ``y_{k+1} = -1`` (plain binary, ``+1`` maps to bit 0).

For ``T = 2`` the pmf depends on ``q`` only through the disagreement
probability ``mu1 = eta(q)``. For ``T = 3`` the four classes
``{y, -y}`` carry probabilities ``mu0`` (all equal) and ``mu_i`` (``y_i``
is the odd one out).
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from . import mc
from .covariance_space import T_from_len, chol_upper, sigma_of_q
from .exceptions import DomainError, RegimeWarning
from .results import MCEstimate
from .scalar_kernels import eta

MU_TOL = 1e-12


# --- pattern indexing ------------------------------------------------------------


def pattern_index(y) -> int | np.ndarray:
    y = np.asarray(y)
    bits = (y < 0).astype(np.int64)
    return bits @ (1 << np.arange(y.shape[-1], dtype=np.int64))


def pattern_from_index(idx: int, T: int) -> np.ndarray:
    return np.where((int(idx) >> np.arange(T)) & 1, -1, 1)


def all_patterns(T: int) -> np.ndarray:
    """``2**T x T`` array; row ``k`` is the pattern with index ``k``."""
    return np.array([pattern_from_index(k, T) for k in range(1 << T)])


def pattern_class_t3(idx: int) -> int:
    """Class ``c`` of a ``T = 3`` pattern: 0 if all signs agree, else the odd position (1-based)."""
    y = pattern_from_index(idx, 3)
    if y[0] == y[1] == y[2]:
        return 0
    for i in range(3):
        if y[i] != y[(i + 1) % 3] and y[(i + 1) % 3] == y[(i + 2) % 3]:
            return i + 1
    raise AssertionError("unreachable")


_CLASS_T3 = np.array([pattern_class_t3(k) for k in range(8)])


# --- exact pmfs ----------------------------------------------------------------


def pmf_t2(q: float) -> np.ndarray:
    """pmf over the four ``T = 2`` patterns: ``(1 - mu1)/2`` if signs agree, else ``mu1/2``."""
    mu1 = float(eta(q))
    agree = 0.5 * (1.0 - mu1)
    # indices 0 (+,+), 1 (-,+), 2 (+,-), 3 (-,-)
    return np.array([agree, 0.5 * mu1, 0.5 * mu1, agree])


def mu_t3(q) -> np.ndarray:
    """Class probabilities ``(mu0, mu1, mu2, mu3)`` for ``q = (q12, q13, q23)``."""
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != 3:
        raise ValueError("T = 3 needs three correlations")
    e12, e13, e23 = eta(q[..., 0]), eta(q[..., 1]), eta(q[..., 2])
    mu1 = 0.5 * (e12 + e13 - e23)
    mu2 = 0.5 * (e12 + e23 - e13)
    mu3 = 0.5 * (e13 + e23 - e12)
    mu = np.stack([1.0 - mu1 - mu2 - mu3, mu1, mu2, mu3], axis=-1)
    if np.any(mu < -MU_TOL):
        raise DomainError("q gives a negative class probability; it is not a valid correlation vector")
    return np.clip(mu, 0.0, None)


def pmf_from_mu_t3(mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    return 0.5 * mu[..., _CLASS_T3]


def pmf_t3(q) -> np.ndarray:
    return pmf_from_mu_t3(mu_t3(q))


def mu_from_pmf_t3(pmf) -> np.ndarray:
    pmf = np.asarray(pmf, dtype=float)
    return np.stack([pmf[..., _CLASS_T3 == c].sum(axis=-1) for c in range(4)], axis=-1)


def marginalize_last(pmf, T: int) -> np.ndarray:
    """Drop ``y_T`` from a pmf over ``T`` signs."""
    pmf = np.asarray(pmf, dtype=float)
    half = 1 << (T - 1)
    return pmf[..., :half] + pmf[..., half:]


# --- Monte Carlo pmfs ---------------------------------------------------------------


def pmf_mc(q, n_samples: int, seed: int, workers: int | None = None) -> np.ndarray:
    """Empirical pattern frequencies from antithetic pairs ``(z, -z)``, ``z ~ N(0, Sigma(q))``.

    ``n_samples`` counts individual draws, each antithetic pair contributing two.
    """
    q = np.asarray(q, dtype=float)
    T = T_from_len(q.size)
    U = chol_upper(sigma_of_q(q))
    n_pairs_ = max(1, int(n_samples) // 2)
    weights = 1 << np.arange(T)

    def chunk(rng, size):
        z = rng.standard_normal((size, T)) @ U
        idx = (z < 0).astype(np.int64) @ weights
        counts = np.bincount(idx, minlength=1 << T)
        # -z flips every bit
        return counts + counts[::-1]

    counts = np.sum(mc.map_chunks(chunk, n_pairs_, seed, mc.STREAM_PMF, workers), axis=0)
    return counts / (2.0 * n_pairs_)


def pmf_half_normal(q, y, n_samples: int, seed: int, workers: int | None = None) -> MCEstimate:
    """Pattern probability as a half-normal expectation.

    ``f(y) = 2**-T / sqrt(det Sigma) * E[exp(v^T (I - Sigma^-1) v / 2)]``
    with ``v = u * y`` and ``u`` i.i.d. half-normal. The variance is
    infinite once ``lambda_max(Sigma) >= 2``.
    """
    q = np.asarray(q, dtype=float)
    T = T_from_len(q.size)
    y = np.asarray(y, dtype=float)
    if y.shape != (T,) or not np.all(np.abs(y) == 1):
        raise ValueError(f"y must be a sign vector of length {T}")
    S = sigma_of_q(q)
    lam = np.linalg.eigvalsh(S)
    if lam[0] <= 0:
        raise DomainError("Sigma(q) must be positive definite")
    if lam[-1] >= 2.0 or np.max(np.abs(q), initial=0.0) > 0.9:
        warnings.warn(
            "half-normal estimator has heavy or infinite variance at this q "
            f"(largest eigenvalue {lam[-1]:.3g})",
            RegimeWarning,
            stacklevel=2,
        )
    A = np.eye(T) - np.linalg.inv(S)
    scale = 2.0**-T / math.sqrt(float(np.prod(lam)))

    def chunk(rng, size):
        v = np.abs(rng.standard_normal((size, T))) * y
        return np.exp(0.5 * np.einsum("ni,ij,nj->n", v, A, v))

    est = mc.mc_mean(chunk, n_samples, seed, mc.STREAM_HALF_NORMAL, workers)
    return MCEstimate(scale * est.value, scale * est.std_err)


# --- Fisher information ----------------------------------------------------------------


def _check_mu(mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise DomainError("Fisher information is singular when a class probability is 0")
    return mu


def fisher_mu(mu):
    """Fisher information in the class parameterization.

    ``T = 3``: pass ``(mu0, mu1, mu2, mu3)``; returns the 3x3 matrix for
    ``(mu1, mu2, mu3)``. ``T = 2``: pass ``mu1`` (or ``(mu0, mu1)``);
    returns the scalar ``1 / (mu1 (1 - mu1))``.
    """
    mu = _check_mu(mu)
    if mu.ndim == 0:
        return 1.0 / (mu * (1.0 - mu))
    if mu.shape == (2,):
        return 1.0 / (mu[1] * mu[0])
    if mu.shape == (4,):
        return np.diag(1.0 / mu[1:]) + 1.0 / mu[0]
    raise ValueError("mu must be a scalar, a pair, or four class probabilities")


def fisher_det_mu(mu) -> float:
    """Determinant of ``fisher_mu``: ``prod_i 1/mu_i`` over all classes."""
    mu = _check_mu(mu)
    if mu.ndim == 0:
        return float(1.0 / (mu * (1.0 - mu)))
    return float(np.prod(1.0 / mu))


def _pmf_exact(q, T: int) -> np.ndarray:
    if T == 2:
        return pmf_t2(float(np.asarray(q).reshape(-1)[0]))
    if T == 3:
        return pmf_t3(q)
    raise ValueError("exact pmfs exist for T in {2, 3} only")


def fisher_q_numeric(q, T: int, step: float | None = None):
    """Fisher information of the exact pmf in the ``q`` parameterization, by central differences.

    Returns ``sum_y (d_i f)(d_j f) / f``. With the default step
    ``1e-4 * (1 - max|q|)``, a disagreement above 1e-6 between this and
    ``-sum_y f d_i d_j log f`` is reported as a ``RegimeWarning``.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if q.size != T * (T - 1) // 2:
        raise ValueError(f"q needs {T * (T - 1) // 2} entries for T={T}")
    qmax = float(np.max(np.abs(q)))
    if qmax >= 1.0:
        raise DomainError("q must be interior")
    if step is None:
        step = 1e-4 * (1.0 - qmax)
    m = q.size
    f = _pmf_exact(q, T)
    grads = []
    for i in range(m):
        e = np.zeros(m)
        e[i] = step
        grads.append((_pmf_exact(q + e, T) - _pmf_exact(q - e, T)) / (2.0 * step))
    D = np.array(grads)
    keep = f > 0
    J = (D[:, keep] / f[keep]) @ D[:, keep].T
    J = 0.5 * (J + J.T)

    # Second-derivative form of the same matrix; a mismatch means the step is off.
    H = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            ei = np.zeros(m)
            ej = np.zeros(m)
            ei[i] = step
            ej[j] = step
            d2 = (
                _pmf_exact(q + ei + ej, T)
                - _pmf_exact(q + ei - ej, T)
                - _pmf_exact(q - ei + ej, T)
                + _pmf_exact(q - ei - ej, T)
            ) / (4.0 * step * step)
            H[i, j] = -np.sum(d2[keep] - (D[i, keep] * D[j, keep]) / f[keep])
    if np.max(np.abs(H - J)) > 1e-6 * max(1.0, float(np.max(np.abs(J)))):
        warnings.warn("finite-difference Fisher matrix is step-sensitive here", RegimeWarning, stacklevel=2)
    return float(J[0, 0]) if T == 2 else J


__all__ = [
    "all_patterns",
    "fisher_det_mu",
    "fisher_mu",
    "fisher_q_numeric",
    "marginalize_last",
    "mu_from_pmf_t3",
    "mu_t3",
    "pattern_class_t3",
    "pattern_from_index",
    "pattern_index",
    "pmf_from_mu_t3",
    "pmf_half_normal",
    "pmf_mc",
    "pmf_t2",
    "pmf_t3",
]
