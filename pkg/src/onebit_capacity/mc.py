"""Deterministic chunked Monte Carlo.

Work is cut into fixed-size chunks. Chunk ``i`` of stream ``s`` draws from
``SeedSequence(seed, spawn_key=(s, i))``, and partial results are reduced in
chunk order. The output therefore depends only on ``(seed, n, chunk)`` and
never on how many workers ran the chunks.
"""

from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

from .results import MCEstimate

DEFAULT_CHUNK = 1 << 16
WORKERS_ENV = "ONEBIT_WORKERS"

# stream ids keep independent consumers of one seed apart
STREAM_VOLUME = 1
STREAM_SAMPLER = 2
STREAM_PMF = 3
STREAM_HALF_NORMAL = 4
STREAM_ALPHA_T3 = 5
STREAM_MI_OUTER = 6
STREAM_MI_INNER = 7
STREAM_FISHER = 8
STREAM_CHANNEL = 9
STREAM_ESTIMATOR = 10
STREAM_COHERENT_INPUT = 11

R = TypeVar("R")


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def rng_for(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream, index)))


def derive_seed(seed: int, *labels: object) -> int:
    """Hash a base seed and labels into an independent 63-bit seed."""
    text = ":".join([str(int(seed))] + [str(x) for x in labels])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1


def chunk_sizes(n: int, chunk: int = DEFAULT_CHUNK) -> list[int]:
    if n < 0:
        raise ValueError("n must be nonnegative")
    full, rest = divmod(int(n), int(chunk))
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(
    fn: Callable[[np.random.Generator, int], R],
    n: int,
    seed: int,
    stream: int,
    workers: int | None = None,
    chunk: int = DEFAULT_CHUNK,
) -> list[R]:
    """Run ``fn(rng, size)`` over the chunks of ``n`` draws; results in chunk order."""
    sizes = chunk_sizes(n, chunk)
    jobs = [(rng_for(seed, stream, i), m) for i, m in enumerate(sizes)]
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(jobs) <= 1:
        return [fn(rng, m) for rng, m in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def moments(values: np.ndarray) -> tuple[int, float, float]:
    """Partial sums ``(count, sum, sum of squares)`` of a chunk."""
    v = np.asarray(values, dtype=float)
    return v.size, float(np.sum(v)), float(np.sum(v * v))


def reduce_moments(parts: Sequence[tuple[int, float, float]]) -> MCEstimate:
    n = 0
    s1 = 0.0
    s2 = 0.0
    for m, a, b in parts:
        n += m
        s1 += a
        s2 += b
    if n == 0:
        raise ValueError("no samples")
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0)
    se = math.sqrt(var / (n - 1)) if n > 1 else math.inf
    return MCEstimate(mean, se)


def mc_mean(
    fn: Callable[[np.random.Generator, int], np.ndarray],
    n: int,
    seed: int,
    stream: int,
    workers: int | None = None,
    chunk: int = DEFAULT_CHUNK,
) -> MCEstimate:
    """Sample mean and standard error of the per-draw values returned by ``fn``."""
    return reduce_moments(map_chunks(lambda rng, m: moments(fn(rng, m)), n, seed, stream, workers, chunk))
