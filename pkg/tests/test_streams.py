import numpy as np

from causaug import SeedStream, draw_gaussian


def test_same_address_replays_sequence():
    a = SeedStream(123).child("gin", 7)
    b = SeedStream(123).child("gin", 7)
    np.testing.assert_array_equal(a.normal(1000), b.normal(1000))
    np.testing.assert_array_equal(a.uniform(50), b.uniform(50))


def test_sequence_independent_of_split_points():
    a = SeedStream(9).child("x")
    whole = a.normal(100)
    b = SeedStream(9).child("x")
    parts = np.concatenate([b.normal(30), b.normal(70)])
    np.testing.assert_array_equal(whole, parts)


def test_distinct_addresses_differ():
    root = SeedStream(5)
    assert not np.array_equal(root.child("a").normal(8), root.child("b").normal(8))
    assert not np.array_equal(root.child("a", 0).normal(8), root.child("a", 1).normal(8))
    assert not np.array_equal(SeedStream(5).normal(8), SeedStream(6).normal(8))


def test_gaussian_moments():
    vals = draw_gaussian(SeedStream(2024).child("stats"), 1_000_000)
    assert abs(vals.mean()) < 0.01
    assert abs(vals.var() - 1.0) < 0.02


def test_sibling_streams_uncorrelated():
    root = SeedStream(77).child("pair")
    a = root.child("sib", 0).normal(100_000)
    b = root.child("sib", 1).normal(100_000)
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) < 0.01


def test_nested_paths_are_distinct_from_flat():
    flat = SeedStream(1).child("ab").normal(4)
    nested = SeedStream(1).child("a").child("b").normal(4)
    assert not np.array_equal(flat, nested)
