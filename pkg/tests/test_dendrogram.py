import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coaltangent.dendrogram import Dendrogram, random_dendrogram
from coaltangent.errors import DomainError
from coaltangent.rng import stream

from conftest import ultrametric_ok

seeds = st.integers(0, 2**32)


def three_leaves():
    # ((0,1) at 1, 2) at 3
    return Dendrogram(3, ((0, 1), (3, 2)), np.array([1.0, 3.0]), 0, np.array([0.2, 0.3, 0.5]))


def test_distances_and_balls():
    d = three_leaves()
    np.testing.assert_array_equal(d.distance_matrix(), [[0, 1, 3], [1, 0, 3], [3, 3, 0]])
    assert d.diameter == 3.0
    assert d.ball_count(0.5) == 3
    assert d.ball_count(1.0) == 2
    assert d.ball_count(3.0) == 1
    b = d.ball(0, 1.0)
    assert b.n_leaves == 2
    assert b.masses.sum() == pytest.approx(0.5)


def test_space_from_balls():
    q = three_leaves().space_from_balls(1.0)
    assert q.n_leaves == 2
    np.testing.assert_allclose(sorted(q.masses), [0.5, 0.5])
    assert q.heights.tolist() == [3.0]


@pytest.mark.parametrize("bad", [
    lambda: Dendrogram(2, ((0, 1),), np.array([0.0])),
    lambda: Dendrogram(3, ((0, 1), (3, 2)), np.array([2.0, 1.0])),
    lambda: Dendrogram(3, ((0,), (1, 2)), np.array([1.0, 2.0])),
    lambda: Dendrogram(2, ((0, 1),), np.array([1.0]), point=5),
])
def test_invalid_trees_rejected(bad):
    with pytest.raises(DomainError):
        bad()


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 12))
def test_random_dendrogram_is_ultrametric(seed, n):
    d = random_dendrogram(n, stream(seed, "dend"), masses=True)
    D = d.distance_matrix()
    assert ultrametric_ok(D)
    np.testing.assert_array_equal(D, D.T)
    assert np.all(np.diag(D) == 0)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 12))
def test_distance_matrix_round_trip(seed, n):
    d = random_dendrogram(n, stream(seed, "rt"), max_arity=4, masses=True)
    e = Dendrogram.from_distance_matrix(d.distance_matrix(), d.point, d.masses)
    np.testing.assert_array_equal(e.distance_matrix(), d.distance_matrix())
    assert Dendrogram.from_text(d.to_text()).same_as(d)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(2, 12), r=st.floats(0, 5))
def test_ball_count_matches_partition(seed, n, r):
    d = random_dendrogram(n, stream(seed, "bc"), masses=True)
    parts = d.ball_decomposition(r)
    assert len(parts) == d.ball_count(r)
    assert sum(p.n_leaves for p in parts) == n
    assert d.space_from_balls(r).total_mass() == pytest.approx(1.0)


def test_restrict_keeps_distances(rng):
    d = random_dendrogram(9, rng)
    keep = np.array([1, 4, 7])
    sub = d.restrict(keep, 4)
    np.testing.assert_array_equal(sub.distance_matrix(), d.distance_matrix()[np.ix_(keep, keep)])
