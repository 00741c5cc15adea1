"""Channel simulation and numerical oracles for the capacity formulas.

``mi_exact_t2`` and ``mi_mc_t3`` compute the mutual information between
the channel parameter and the outputs of ``nr`` antennas, in bits per
block of ``T`` symbols. Divide by ``T`` to compare with capacities per
channel use.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import math
import time
from dataclasses import dataclass, field
from typing import Literal, NamedTuple

import numpy as np
from scipy import special

from . import __version__, mc
from .covariance_space import input_from_q, n_pairs, pairs, snr_from_gamma, uniform_q_batch
from .exceptions import DomainError
from .orthant import mu_t3
from .results import MCEstimate
from .scalar_kernels import LOG2E, xi


# --- channel ------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelBlock:
    X: np.ndarray
    Y: np.ndarray
    seed: int
    snr: float

    def __post_init__(self):
        if self.Y.ndim != 2 or self.Y.shape[1] != self.X.shape[1]:
            raise ValueError("Y must be nr x T with T matching the columns of X")
        if not np.all(np.abs(self.Y) == 1):
            raise ValueError("Y entries must be +1 or -1")


def simulate_block(X, nr: int, seed: int, workers: int | None = None) -> ChannelBlock:
    """``Y = sign(H X + Z)`` with i.i.d. standard normal ``H`` (``nr x nt``) and ``Z``.

    Rows are generated in fixed chunks, so ``Y`` depends only on ``seed``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be an nt x T matrix")
    nt, T = X.shape

    def chunk(rng, m):
        H = rng.standard_normal((m, nt))
        Z = rng.standard_normal((m, T))
        return np.where(H @ X + Z < 0, -1, 1).astype(np.int8)

    rows = mc.map_chunks(chunk, int(nr), seed, mc.STREAM_CHANNEL, workers)
    Y = np.concatenate(rows) if rows else np.zeros((0, T), dtype=np.int8)
    snr = float(np.max(np.sum(X * X, axis=0)))
    return ChannelBlock(X, Y, int(seed), snr)


def disagreement_rates(Y) -> np.ndarray:
    """Fraction of antennas where ``y_i != y_j``, per pair in lexicographic order."""
    Y = np.asarray(Y)
    T = Y.shape[1]
    return np.array([np.mean(Y[:, i] != Y[:, j]) for i, j in pairs(T)])


def estimate_q_hat(Y) -> np.ndarray:
    """Plug-in estimate ``cos(pi * disagreement rate)`` of each pair correlation."""
    return np.cos(math.pi * disagreement_rates(Y))


def estimator_mse_sweep(
    T: int,
    gamma: float,
    nr_list,
    trials: int,
    seed: int,
    workers: int | None = None,
) -> list[dict]:
    """Empirical MSE of ``estimate_q_hat`` against the ``pi**2 / nr`` bound.

    Each trial draws ``q`` uniformly in ``Q_gamma``, transmits the
    matching triangular input and estimates ``q`` from the block. One row
    per ``(nr, pair)``; ``passed`` compares with ``pi**2/nr * (1 + 5/sqrt(trials))``.
    """
    if trials < 100:
        raise ValueError("trials must be >= 100")
    nr_list = [int(n) for n in nr_list]
    m = n_pairs(T)

    def chunk(rng, size):
        err = np.zeros((len(nr_list), m))
        for _ in range(size):
            if gamma == 0:
                q = np.zeros(m)
                X = np.zeros((T, T))
            else:
                q = uniform_q_batch(rng, T, gamma, 1)[0]
                X = input_from_q(q, snr_from_gamma(gamma))
            for a, nr in enumerate(nr_list):
                block_seed = int(rng.integers(0, 2**63 - 1))
                Y = simulate_block(X, nr, block_seed, workers=1).Y
                err[a] += (estimate_q_hat(Y) - q) ** 2
        return err

    total = np.sum(mc.map_chunks(chunk, trials, seed, mc.STREAM_ESTIMATOR, workers, chunk=32), axis=0)
    mse = total / trials
    rows = []
    for a, nr in enumerate(nr_list):
        bound = math.pi**2 / nr
        limit = bound * (1.0 + 5.0 / math.sqrt(trials))
        for k, (i, j) in enumerate(pairs(T)):
            rows.append(
                {
                    "T": T,
                    "gamma": gamma,
                    "nr": nr,
                    "pair": f"{i + 1}-{j + 1}",
                    "mse": float(mse[a, k]),
                    "bound": bound,
                    "limit": limit,
                    "passed": bool(mse[a, k] <= limit),
                }
            )
    return rows


# --- mutual information, T = 2 ---------------------------------------------------------


class MIT2Result(NamedTuple):
    bits: float
    k_marginal: np.ndarray  # P(K = k), K = number of disagreeing antennas
    nodes: int


def _theta_rule(nr: int, gamma: float, quad_points: int | None):
    # Jeffreys on mu is uniform in theta with mu = sin(theta)**2; the posterior
    # width in theta is about 1/(2 sqrt(nr)) regardless of mu.
    mu_min = math.acos(gamma) / math.pi
    th0 = math.asin(math.sqrt(mu_min))
    th1 = 0.5 * math.pi - th0
    width = th1 - th0
    if quad_points is None:
        sigma = 0.5 / math.sqrt(nr)
        panels = max(32, math.ceil(width / sigma))
    else:
        panels = max(1, math.ceil(quad_points / 8))
    x, w = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(th0, th1, panels + 1)
    a = edges[:-1, None]
    b = edges[1:, None]
    theta = (0.5 * (a + b) + 0.5 * (b - a) * x).ravel()
    weight = (0.5 * (b - a) * w).ravel()
    return theta, weight


def mi_exact_t2_detail(
    nr: int,
    gamma: float,
    prior: Literal["jeffreys", "uniform"] = "jeffreys",
    quad_points: int | None = None,
) -> MIT2Result:
    """``I(mu1; K)`` with ``K ~ Binomial(nr, mu1)``, in bits per block.

    ``jeffreys`` is the arcsine law on ``[mu_min, 1 - mu_min]``; ``uniform``
    puts ``q`` uniform on ``[-gamma, gamma]``. The outer integral uses
    8-point Gauss-Legendre panels in ``theta = arcsin(sqrt(mu1))``, about
    one panel per posterior standard deviation unless ``quad_points`` fixes
    the node count. Binomial terms are summed exactly within 14 standard
    deviations of the mean.
    """
    nr = int(nr)
    if not 1 <= nr <= 2**20:
        raise DomainError("nr must lie in [1, 2**20]")
    if not 0.0 <= gamma < 1.0:
        raise DomainError("gamma must lie in [0, 1)")
    k = np.arange(nr + 1)
    if gamma == 0.0:
        pk = np.exp(special.gammaln(nr + 1) - special.gammaln(k + 1) - special.gammaln(nr - k + 1) - nr * math.log(2.0))
        return MIT2Result(0.0, pk, 1)

    theta, weight = _theta_rule(nr, gamma, quad_points)
    mu = np.sin(theta) ** 2
    if prior == "uniform":
        # q = cos(pi mu): |dq/dtheta| = pi sin(pi mu) sin(2 theta)
        weight = weight * np.sin(math.pi * mu) * np.sin(2.0 * theta)
    elif prior != "jeffreys":
        raise ValueError(f"unknown prior {prior!r}")
    weight = weight / np.sum(weight)

    log_binom = special.gammaln(nr + 1) - special.gammaln(k + 1) - special.gammaln(nr - k + 1)
    pk = np.zeros(nr + 1)
    neg_h_cond = 0.0
    sd = np.sqrt(nr * mu * (1.0 - mu))
    for m_i, s_i, w_i in zip(mu, sd, weight):
        lo = max(0, int(nr * m_i - 14.0 * s_i) - 2)
        hi = min(nr, int(nr * m_i + 14.0 * s_i) + 2)
        kk = k[lo : hi + 1]
        lp = log_binom[lo : hi + 1] + kk * math.log(m_i) + (nr - kk) * math.log1p(-m_i)
        p = np.exp(lp)
        pk[lo : hi + 1] += w_i * p
        neg_h_cond += w_i * float(np.sum(p * lp))
    nz = pk > 0
    h_marg = -float(np.sum(pk[nz] * np.log(pk[nz])))
    return MIT2Result((neg_h_cond + h_marg) * LOG2E, pk, int(mu.size))


def mi_exact_t2(
    nr: int,
    gamma: float,
    prior: Literal["jeffreys", "uniform"] = "jeffreys",
    quad_points: int | None = None,
) -> float:
    """Mutual information between ``q`` and the outputs of ``nr`` antennas for ``T = 2``, in bits per block."""
    return mi_exact_t2_detail(nr, gamma, prior, quad_points).bits


# --- mutual information, T = 3 ---------------------------------------------------------------

# Q_gamma for T = 3 is invariant under relabeling the symbols and flipping
# the sign of one symbol; both act on (q12, q13, q23) by signed permutation.
_SIGNS = ((1, 1, 1), (-1, 1, 1), (1, -1, 1), (1, 1, -1))


def _symmetry_maps():
    maps = []
    pr = pairs(3)
    for perm in itertools.permutations(range(3)):
        for d in _SIGNS:
            idx = []
            sgn = []
            for i, j in pr:
                a, b = sorted((perm[i], perm[j]))
                idx.append(pr.index((a, b)))
                sgn.append(d[i] * d[j])
            maps.append((np.array(idx), np.array(sgn, dtype=float)))
    return maps


_SYMMETRIES_T3 = _symmetry_maps()


def _symmetrize_t3(q: np.ndarray) -> np.ndarray:
    return np.concatenate([q[:, idx] * sgn for idx, sgn in _SYMMETRIES_T3])


class MIEstimate(NamedTuple):
    value: float
    std_err: float
    bias_diag: float


_INNER_BLOCK = 8192


def _log_evidence(N: np.ndarray, log_mu_inner: np.ndarray) -> np.ndarray:
    # log mean_j prod_c mu_jc**N_c, streamed over inner blocks
    parts = [
        special.logsumexp(N @ log_mu_inner[c : c + _INNER_BLOCK].T, axis=1)
        for c in range(0, log_mu_inner.shape[0], _INNER_BLOCK)
    ]
    return special.logsumexp(np.stack(parts, axis=1), axis=1) - math.log(log_mu_inner.shape[0])


def mi_mc_t3(
    nr: int,
    gamma: float,
    n_outer: int = 2000,
    n_inner: int = 4000,
    seed: int = 0,
    workers: int | None = None,
) -> MIEstimate:
    """Nested Monte Carlo ``I(q; N)`` for ``T = 3`` and uniform ``q``, in bits per block.

    ``N`` counts antennas per output class and is sufficient for ``q``. The
    evidence ``p(N)`` averages over ``n_inner`` fresh uniform draws, each
    expanded into its 24 images under the symmetries of ``Q_gamma``. That
    average is unbiased for ``p(N)``, but its log is biased low, so the
    estimate is biased high. ``bias_diag`` is the estimate minus the one
    with ``2 * n_inner`` inner draws; both share the outer draws.
    """
    if not 0.0 <= gamma < 1.0:
        raise DomainError("gamma must lie in [0, 1)")
    nr = int(nr)
    inner_rng = mc.rng_for(seed, mc.STREAM_MI_INNER)
    q_inner = _symmetrize_t3(uniform_q_batch(inner_rng, 3, gamma, 2 * n_inner))
    log_mu_all = np.log(np.maximum(mu_t3(q_inner), 1e-300))
    # first n_inner draws and all their images
    half = np.concatenate([np.arange(k * 2 * n_inner, k * 2 * n_inner + n_inner) for k in range(24)])
    log_mu_half = log_mu_all[half]

    def chunk(rng, size):
        q = uniform_q_batch(rng, 3, gamma, size)
        mu = mu_t3(q)
        N = rng.multinomial(nr, mu).astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lp = np.sum(np.where(N > 0, N * np.log(mu), 0.0), axis=1)
        return np.stack([lp - _log_evidence(N, log_mu_half), lp - _log_evidence(N, log_mu_all)], axis=1)

    d = np.concatenate(mc.map_chunks(chunk, n_outer, seed, mc.STREAM_MI_OUTER, workers, chunk=256)) * LOG2E
    est = float(np.mean(d[:, 0]))
    se = float(np.std(d[:, 0], ddof=1) / math.sqrt(n_outer)) if n_outer > 1 else math.inf
    return MIEstimate(est, se, est - float(np.mean(d[:, 1])))


# --- coherent Fisher matrix ---------------------------------------------------------------------


class MatrixEstimate(NamedTuple):
    value: np.ndarray
    std_err: np.ndarray


def fisher_coherent_mc(x, n_samples: int, seed: int, workers: int | None = None) -> MatrixEstimate:
    """Monte Carlo ``E[xi(h.x) h h^T]`` over standard normal ``h``; entrywise std errors."""
    x = np.asarray(x, dtype=float).reshape(-1)
    nt = x.size

    def chunk(rng, m):
        h = rng.standard_normal((m, nt))
        w = xi(h @ x)
        outer = (w[:, None, None] * h[:, :, None] * h[:, None, :]).reshape(m, -1)
        return m, outer.sum(axis=0), (outer * outer).sum(axis=0)

    parts = mc.map_chunks(chunk, n_samples, seed, mc.STREAM_FISHER, workers)
    n = sum(p[0] for p in parts)
    s1 = np.zeros(nt * nt)
    s2 = np.zeros(nt * nt)
    for _, a, b in parts:
        s1 += a
        s2 += b
    mean = s1 / n
    var = np.maximum(s2 / n - mean * mean, 0.0)
    J = mean.reshape(nt, nt)
    J = 0.5 * (J + J.T)
    return MatrixEstimate(J, np.sqrt(var / max(n - 1, 1)).reshape(nt, nt))


# --- manifests ----------------------------------------------------------------------------------


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=float)


@dataclass
class RunManifest:
    """What was run, with which inputs; enough to replay a record exactly."""

    operation: str
    params: dict
    seed: int | None = None
    samples: dict = field(default_factory=dict)
    version: str = __version__
    wall_clock: float = 0.0
    outputs_digest: str = ""

    @property
    def manifest_id(self) -> str:
        key = {
            "operation": self.operation,
            "params": self.params,
            "seed": self.seed,
            "samples": self.samples,
            "version": self.version,
        }
        return hashlib.sha256(_canonical(key).encode()).hexdigest()[:16]

    def digest_outputs(self, records) -> str:
        self.outputs_digest = hashlib.sha256(_canonical(records).encode()).hexdigest()
        return self.outputs_digest

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["manifest_id"] = self.manifest_id
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False


__all__ = [
    "ChannelBlock",
    "MIEstimate",
    "MIT2Result",
    "MatrixEstimate",
    "RunManifest",
    "disagreement_rates",
    "estimate_q_hat",
    "estimator_mse_sweep",
    "fisher_coherent_mc",
    "mi_exact_t2",
    "mi_exact_t2_detail",
    "mi_mc_t3",
    "simulate_block",
]
