"""The non-coherent parameter space.

A block of ``T`` symbols is summarized by the vector ``q`` of pairwise
output correlations, one entry per pair ``(i, j)``, ``i < j``, in
lexicographic order. ``Sigma(q)`` is the unit-diagonal matrix with those
off-diagonals, and the reachable set at ``gamma = snr / (1 + snr)`` is

    Q_gamma = {q : Sigma(q) >= (1 - gamma) I}.

Indices are 0-based in code; pair ``(0, 1)`` is the first entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy import special

from . import mc
from .exceptions import DomainError
from .results import MCEstimate
from .scalar_kernels import GLAISHER, LOG2E

PSD_TOL = 1e-10
CHOL_JITTER = 1e-12


def gamma_from_snr(snr: float) -> float:
    if not snr > 0:
        raise DomainError("snr must be positive")
    return snr / (1.0 + snr)


def snr_from_gamma(gamma: float) -> float:
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0, 1)")
    return gamma / (1.0 - gamma)


@dataclass(frozen=True)
class SnrContext:
    snr: float
    gamma: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "gamma", gamma_from_snr(self.snr))


# --- pair indexing -----------------------------------------------------------


def n_pairs(T: int) -> int:
    return T * (T - 1) // 2


@lru_cache(maxsize=None)
def pairs(T: int) -> tuple[tuple[int, int], ...]:
    """0-based pairs ``(i, j)``, ``i < j``, in lexicographic order."""
    if T < 2:
        raise DomainError("T must be >= 2")
    return tuple((i, j) for i in range(T) for j in range(i + 1, T))


def pair_index(i: int, j: int, T: int) -> int:
    if i > j:
        i, j = j, i
    if not 0 <= i < j < T:
        raise IndexError(f"no pair ({i}, {j}) for T={T}")
    return i * (2 * T - i - 1) // 2 + (j - i - 1)


def T_from_len(m: int) -> int:
    T = int(round((1.0 + math.sqrt(1.0 + 8.0 * m)) / 2.0))
    if n_pairs(T) != m or T < 2:
        raise ValueError(f"{m} is not a pair count T(T-1)/2 for T >= 2")
    return T


def _triu(T: int):
    iu = np.triu_indices(T, 1)  # row-major, i.e. lexicographic pair order
    return iu


# --- matrices ------------------------------------------------------------------


def sigma_of_q(q, T: int | None = None) -> np.ndarray:
    """Unit-diagonal ``Sigma(q)``; a leading batch axis in ``q`` is kept."""
    q = np.asarray(q, dtype=float)
    if T is None:
        T = T_from_len(q.shape[-1])
    elif q.shape[-1] != n_pairs(T):
        raise ValueError(f"q needs {n_pairs(T)} entries for T={T}")
    out = np.zeros(q.shape[:-1] + (T, T))
    iu = _triu(T)
    out[..., iu[0], iu[1]] = q
    out[..., iu[1], iu[0]] = q
    idx = np.arange(T)
    out[..., idx, idx] = 1.0
    return out


def offdiag(S) -> np.ndarray:
    """Correlation vector read off the upper triangle of ``S``."""
    S = np.asarray(S, dtype=float)
    iu = _triu(S.shape[-1])
    return S[..., iu[0], iu[1]]


def is_member(q, gamma: float, method: Literal["eig", "chol"] = "eig", tol: float = PSD_TOL):
    """Whether ``q`` lies in ``Q_gamma``; vectorized over a leading batch axis.

    ``"eig"`` checks ``lambda_min(Sigma(q)) >= 1 - gamma - tol``.
    ``"chol"`` attempts a Cholesky factorization of ``Sigma(q / gamma)``,
    which is positive semidefinite exactly when ``q`` is a member.
    """
    if not 0.0 < gamma <= 1.0:
        raise DomainError("gamma must lie in (0, 1]")
    q = np.asarray(q, dtype=float)
    if method == "eig":
        lam = np.linalg.eigvalsh(sigma_of_q(q))[..., 0]
        return lam >= (1.0 - gamma) - tol
    if method == "chol":
        S = sigma_of_q(q / gamma)
        batch = S.reshape((-1,) + S.shape[-2:])
        out = np.empty(batch.shape[0], dtype=bool)
        # PSD tolerance translated to the gamma-scaled matrix
        shift = tol / gamma * np.eye(S.shape[-1])
        for k, M in enumerate(batch):
            try:
                np.linalg.cholesky(M + shift)
                out[k] = True
            except np.linalg.LinAlgError:
                out[k] = False
        out = out.reshape(S.shape[:-2])
        return out[()] if out.ndim == 0 else out
    raise ValueError(f"unknown membership method {method!r}")


def rho_of_x(X) -> np.ndarray:
    """Correlations ``x_i.x_j / sqrt((1 + |x_i|^2)(1 + |x_j|^2))`` of the columns of ``X``."""
    X = np.asarray(X, dtype=float)
    G = np.swapaxes(X, -1, -2) @ X
    d = 1.0 + np.diagonal(G, axis1=-2, axis2=-1)
    return offdiag(G / np.sqrt(d[..., :, None] * d[..., None, :]))


def chol_upper(M, jitter: float = CHOL_JITTER) -> np.ndarray:
    """Upper-triangular ``U`` with ``U^T U = M``.

    A PSD matrix on the boundary gets ``jitter`` added to its diagonal and
    the columns of the factor are then rescaled to the original diagonal.
    """
    M = np.asarray(M, dtype=float)
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        try:
            L = np.linalg.cholesky(M + jitter * np.eye(M.shape[-1]))
        except np.linalg.LinAlgError:
            raise DomainError("matrix is not positive semidefinite within tolerance") from None
        L *= np.sqrt(np.diag(M) / np.sum(L * L, axis=1))[:, None]
    return L.T


def input_from_q(q, snr: float, nt: int | None = None) -> np.ndarray:
    """An input ``X`` with ``rho(X) = q``: ``sqrt(snr) * Chol(Sigma(q / gamma))``.

    Returns the ``T x T`` upper-triangular factor, padded with zero rows
    to ``nt x T`` if ``nt`` is given.
    """
    q = np.asarray(q, dtype=float)
    T = T_from_len(q.size)
    gamma = gamma_from_snr(snr)
    if not is_member(q, gamma):
        raise DomainError("q is outside Q_gamma for this snr")
    X = math.sqrt(snr) * chol_upper(sigma_of_q(q / gamma))
    if nt is not None:
        if nt < T:
            raise ValueError("nt must be >= T")
        X = np.vstack([X, np.zeros((nt - T, T))])
    return X


# --- volumes -------------------------------------------------------------------


def log_vol_Q_exact(T: int, gamma: float = 1.0) -> float:
    """Natural log of ``Vol(Q_gamma)`` for ``T`` symbols."""
    if T < 2:
        raise DomainError("T must be >= 2")
    if not 0.0 < gamma <= 1.0:
        raise DomainError("gamma must lie in (0, 1]")
    m = n_pairs(T)
    j = np.arange(2, T)
    log_v1 = (
        0.5 * (m + 1) * math.log(math.pi)
        + math.lgamma(T)
        + float(np.sum(special.gammaln(0.5 * j)))
        - (T - 1) * math.log(2.0)
        - T * math.lgamma(0.5 * (T + 1))
    )
    return log_v1 + m * math.log(gamma)


def vol_Q_exact(T: int, gamma: float = 1.0) -> float:
    return math.exp(log_vol_Q_exact(T, gamma))


def vol_Q_mc(T: int, gamma: float, n_samples: int, seed: int, workers: int | None = None) -> MCEstimate:
    """Rejection estimate of ``Vol(Q_gamma)`` from uniform draws on ``[-gamma, gamma]**m``."""
    if n_samples < 1000:
        raise ValueError("vol_Q_mc needs at least 1000 samples")
    m = n_pairs(T)
    box = (2.0 * gamma) ** m

    def chunk(rng, size):
        q = rng.uniform(-gamma, gamma, size=(size, m))
        return is_member(q, gamma).astype(float)

    est = mc.mc_mean(chunk, n_samples, seed, mc.STREAM_VOLUME, workers)
    return MCEstimate(est.value * box, est.std_err * box)


def log_vol_Q_asymptotic(T: int, precision: Literal["coarse", "fine"] = "fine") -> float:
    """Large-``T`` expansion of ``log2 Vol(Q_1)``.

    ``coarse`` keeps the leading ``T**2 log T`` and ``T**2`` terms plus the
    linear correction. ``fine`` adds the ``log T`` and constant terms from
    the Barnes G-function expansion, so the error is ``O(1/T)``.
    """
    if T < 2:
        raise DomainError("T must be >= 2")
    head = 0.25 * (T - 1) * math.log2(2.0 * math.pi * math.sqrt(math.e) / T)
    if precision == "coarse":
        return T * (head - LOG2E / 8.0)
    if precision == "fine":
        return (
            T * head
            - T * LOG2E / 8.0
            - math.log2(T) / 24.0
            - 0.5 * math.log2(GLAISHER)
            + LOG2E / 8.0
            + 0.25
        )
    raise ValueError(f"unknown precision {precision!r}")


# --- uniform sampler -------------------------------------------------------------


def uniform_q_batch(rng: np.random.Generator, T: int, gamma: float, size: int) -> np.ndarray:
    # Column j of a unit-column upper-triangular factor U (j = 1..T-1, 0-based)
    # takes the first j coordinates of a uniform point on the sphere in R^(T+1);
    # their density on the j-ball is (1 - |r|^2)^((T - j - 1) / 2).
    U = np.zeros((size, T, T))
    U[:, 0, 0] = 1.0
    for j in range(1, T):
        g = rng.standard_normal((size, T + 1))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = g[:, :j]
        U[:, :j, j] = r
        U[:, j, j] = np.sqrt(np.clip(1.0 - np.sum(r * r, axis=1), 0.0, None))
    return gamma * offdiag(np.swapaxes(U, 1, 2) @ U)


def sample_uniform_Q(T: int, gamma: float, seed, size: int | None = None) -> np.ndarray:
    """Uniform draws from ``Q_gamma``.

    ``seed`` may be an int (stream-seeded) or a ``numpy`` Generator.
    """
    if T < 2:
        raise DomainError("T must be >= 2")
    if not 0.0 <= gamma <= 1.0:
        raise DomainError("gamma must lie in [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else mc.rng_for(seed, mc.STREAM_SAMPLER)
    q = uniform_q_batch(rng, T, gamma, 1 if size is None else int(size))
    return q[0] if size is None else q
