import numpy as np
import pytest

from compforce.rng import InvalidRangeError, SeededRng, rng_uniform


def test_zero_count_is_empty():
    assert rng_uniform(SeededRng(7), -1.0, 1.0, 0).size == 0


def test_tiny_range_contained():
    eps = 1e-300
    vals = rng_uniform(SeededRng(7), 0.0, eps, 5)
    assert vals.size == 5
    assert np.all(vals >= 0.0) and np.all(vals < eps)


def test_large_sample_mean():
    # analytic mean of U[-0.5, 0.5] is 0; sd of the sample mean is ~2.9e-4
    vals = rng_uniform(SeededRng(7), -0.5, 0.5, 10**6)
    assert abs(vals.mean()) < 0.01
    assert vals.min() >= -0.5 and vals.max() < 0.5


@pytest.mark.parametrize("lo,hi", [(1.0, 1.0), (2.0, -2.0)])
def test_invalid_range(lo, hi):
    with pytest.raises(InvalidRangeError):
        rng_uniform(SeededRng(7), lo, hi, 3)


def test_same_seed_same_stream():
    a = rng_uniform(SeededRng(123), 0, 1, 50, stream="W")
    b = rng_uniform(SeededRng(123), 0, 1, 50, stream="W")
    np.testing.assert_array_equal(a, b)


def test_substreams_differ_and_ignore_order():
    rng = SeededRng(5)
    w_first = rng.substream("W").random(20)
    fb = rng.substream("W_fb").random(20)
    w_second = rng.substream("W").random(20)
    np.testing.assert_array_equal(w_first, w_second)
    assert not np.array_equal(w_first, fb)


def test_seed_range_checked():
    SeededRng(2**64 - 1)
    with pytest.raises(ValueError):
        SeededRng(-1)
