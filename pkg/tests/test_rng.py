import numpy as np

from coaltangent.rng import kernel_seed, stream, streams


def test_streams_are_keyed():
    a = stream(1, "x", 3).random(5)
    np.testing.assert_array_equal(a, stream(1, "x", 3).random(5))
    assert not np.array_equal(a, stream(1, "x", 4).random(5))
    assert not np.array_equal(a, stream(1, "y", 3).random(5))
    assert not np.array_equal(a, stream(2, "x", 3).random(5))


def test_streams_list_matches_single():
    s = streams(5, "t", 3)
    np.testing.assert_array_equal(s[2].random(3), stream(5, "t", 2).random(3))


def test_kernel_seed_range():
    assert 0 <= kernel_seed(stream(0)) < 2**62
