import numpy as np
from scipy import stats

from aqpe.rng import RngStream


def test_same_key_same_sequence():
    a = RngStream(7, (1, 2)).random(100)
    b = RngStream(7).child(1).child(2).random(100)
    np.testing.assert_array_equal(a, b)


def test_distinct_keys_differ_and_look_independent():
    a = RngStream(7, (1,)).random(20000)
    b = RngStream(7, (2,)).random(20000)
    assert not np.array_equal(a, b)
    r, p = stats.pearsonr(a, b)
    assert abs(r) < 0.03
    assert stats.kstest(a, "uniform").pvalue > 1e-3


def test_seed_is_reduced_to_64_bits():
    a = RngStream(2 ** 64 + 5).random(5)
    b = RngStream(5).random(5)
    np.testing.assert_array_equal(a, b)


def test_child_does_not_depend_on_parent_consumption():
    parent = RngStream(3)
    c1 = parent.child(9).random(4)
    parent.random(1000)
    c2 = parent.child(9).random(4)
    np.testing.assert_array_equal(c1, c2)
