import numpy as np
import pytest

from onebit_capacity import mc


def test_chunk_sizes():
    assert mc.chunk_sizes(0) == []
    assert mc.chunk_sizes(10, 4) == [4, 4, 2]
    assert sum(mc.chunk_sizes(200_001)) == 200_001
    with pytest.raises(ValueError):
        mc.chunk_sizes(-1)


def test_streams_are_distinct_and_reproducible():
    a = mc.rng_for(7, mc.STREAM_VOLUME).random(4)
    b = mc.rng_for(7, mc.STREAM_VOLUME).random(4)
    c = mc.rng_for(7, mc.STREAM_SAMPLER).random(4)
    d = mc.rng_for(7, mc.STREAM_VOLUME, 1).random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_derive_seed():
    s = mc.derive_seed(1, "bounds", 3)
    assert s == mc.derive_seed(1, "bounds", 3)
    assert s != mc.derive_seed(1, "bounds", 4)
    assert 0 <= s < 2**63


@pytest.mark.parametrize("workers", [1, 2, 4, 8])
def test_map_chunks_independent_of_workers(workers):
    fn = lambda rng, m: rng.standard_normal(m).sum()
    ref = mc.map_chunks(fn, 10_000, 3, mc.STREAM_PMF, workers=1, chunk=1000)
    out = mc.map_chunks(fn, 10_000, 3, mc.STREAM_PMF, workers=workers, chunk=1000)
    assert out == ref


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv(mc.WORKERS_ENV, "3")
    assert mc.default_workers() == 3
    monkeypatch.setenv(mc.WORKERS_ENV, "junk")
    assert mc.default_workers() == 1


def test_reduce_moments_matches_numpy():
    rng = np.random.default_rng(0)
    chunks = [rng.normal(2.0, 3.0, m) for m in (100, 257, 1000)]
    est = mc.reduce_moments([mc.moments(c) for c in chunks])
    allv = np.concatenate(chunks)
    assert est.value == pytest.approx(allv.mean(), rel=1e-12)
    assert est.std_err == pytest.approx(allv.std(ddof=1) / np.sqrt(allv.size), rel=1e-9)
    with pytest.raises(ValueError):
        mc.reduce_moments([])


def test_mc_mean_is_unbiased():
    est = mc.mc_mean(lambda rng, m: rng.random(m), 200_000, 1, mc.STREAM_VOLUME)
    assert abs(est.value - 0.5) < 4 * est.std_err
