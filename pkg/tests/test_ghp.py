import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coaltangent import ghp
from coaltangent.dendrogram import Dendrogram, random_dendrogram
from coaltangent.errors import DomainError
from coaltangent.rng import stream

seeds = st.integers(0, 2**32)


def two_point(a):
    return Dendrogram(2, ((0, 1),), np.array([a]))


def test_two_point_spaces():
    assert ghp.gh_exact(two_point(1.0), two_point(3.0)) == 1.0
    assert ghp.gh_exact(two_point(2.5), Dendrogram.singleton()) == 1.25


def brute_gh(X, Y):
    DX, DY = X.distance_matrix(), Y.distance_matrix()
    pairs = [(x, y) for x in range(X.n_leaves) for y in range(Y.n_leaves)]
    best = np.inf
    for m in range(1, 1 << len(pairs)):
        R = [pairs[i] for i in range(len(pairs)) if m >> i & 1]
        if {x for x, _ in R} != set(range(X.n_leaves)) or {y for _, y in R} != set(range(Y.n_leaves)):
            continue
        best = min(best, ghp.distortion(DX, DY, R))
    return best / 2


@pytest.mark.parametrize("seed", range(8))
def test_exact_matches_brute_force(seed):
    rng = stream(seed, "brute")
    X = random_dendrogram(int(rng.integers(1, 4)), rng)
    Y = random_dendrogram(int(rng.integers(1, 4)), rng)
    assert ghp.gh_exact(X, Y) == pytest.approx(brute_gh(X, Y), abs=1e-14)


@settings(max_examples=80, deadline=None)
@given(seed=seeds)
def test_symmetry_and_identity(seed):
    rng = stream(seed, "sym")
    X = random_dendrogram(int(rng.integers(1, 6)), rng)
    Y = random_dendrogram(int(rng.integers(1, 6)), rng)
    assert ghp.gh_exact(X, Y) == ghp.gh_exact(Y, X)
    assert ghp.gh_exact(X, X) == 0.0


@settings(max_examples=80, deadline=None)
@given(seed=seeds)
def test_triangle_inequality(seed):
    rng = stream(seed, "tri")
    X, Y, Z = (random_dendrogram(int(rng.integers(1, 6)), rng) for _ in range(3))
    assert ghp.gh_exact(X, Z) <= ghp.gh_exact(X, Y) + ghp.gh_exact(Y, Z) + 1e-12


@settings(max_examples=80, deadline=None)
@given(seed=seeds)
def test_bounds_bracket_exact(seed):
    rng = stream(seed, "br")
    X = random_dendrogram(int(rng.integers(1, 7)), rng)
    Y = random_dendrogram(int(rng.integers(1, 7)), rng)
    lo, hi = ghp.gh_bounds(X, Y)
    g = ghp.gh_exact(X, Y)
    assert lo <= g + 1e-12 and g <= hi + 1e-12


def test_exact_cap():
    rng = stream(0, "cap")
    with pytest.raises(DomainError):
        ghp.gh_exact(random_dendrogram(10, rng), random_dendrogram(10, rng))


def test_rescaling_scales_distance(rng):
    X, Y = random_dendrogram(4, rng), random_dendrogram(5, rng)
    assert ghp.gh_exact(X.rescale(3.0), Y.rescale(3.0)) == pytest.approx(3 * ghp.gh_exact(X, Y))


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_prokhorov_closed_form_matches_bruteforce(seed):
    rng = stream(seed, "pr")
    X = random_dendrogram(int(rng.integers(1, 8)), rng, masses=True)
    Y = X.with_masses(rng.dirichlet(np.ones(X.n_leaves)))
    assert ghp.prokhorov(X, Y) == pytest.approx(ghp.prokhorov_bruteforce(X, Y), abs=1e-12)


def test_pointed_distances(rng):
    X = random_dendrogram(5, rng, masses=True)
    assert ghp.pointed_gh(X, X) == 0.0
    assert ghp.pointed_ghp(X, X) == pytest.approx(0.0, abs=1e-12)
    Y = random_dendrogram(6, rng, masses=True)
    assert 0.0 <= ghp.pointed_gh(X, Y) <= 1.0
    assert ghp.pointed_gh(X, Y) <= ghp.pointed_ghp(X, Y) + 1e-12
