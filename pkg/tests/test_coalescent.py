import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from coaltangent import lambda_core as lc
from coaltangent.coalescent import (
    ancestor_count,
    block_count,
    evans_space,
    extract_Z,
    frequency_of_one,
    simulate,
)
from coaltangent.errors import DomainError
from coaltangent.rng import stream

from conftest import ultrametric_ok


def test_history_structure(rng):
    h = simulate(200, lc.LambdaModel.beta(1.5), rng)
    assert h.absorbed
    assert np.all(np.diff(h.times) >= 0)
    assert h.counts[-1] == 1
    assert h.sizes[-1] == 200
    # every id except the final block has exactly one parent
    assert np.count_nonzero(h.parent < 0) == 1


def test_kingman_absorption_time_mean():
    n, reps = 20, 4000
    m = lc.LambdaModel.kingman()
    t = np.array([simulate(n, m, stream(7, "absorb", i)).final_time for i in range(reps)])
    k = np.arange(2, n + 1)
    mean = np.sum(2.0 / (k * (k - 1)))
    sd = np.sqrt(np.sum((2.0 / (k * (k - 1))) ** 2) / reps)
    assert abs(t.mean() - mean) < 4 * sd


@pytest.mark.parametrize("engine", ["numba", "generic"])
def test_first_merger_size_law(engine):
    n, reps = 30, 4000
    m = lc.LambdaModel.beta(1.3)
    first = np.array([simulate(n, m, stream(3, engine, i), horizon=1e-9 + 10, engine=engine).ks[0]
                      for i in range(reps)])
    p = lc.merger_size_pmf(n, m)
    obs = np.bincount(np.minimum(first, 6), minlength=7)[2:]
    exp = reps * np.concatenate((p[:4], [p[4:].sum()]))
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_horizon_stops(rng):
    h = simulate(1000, lc.LambdaModel.kingman(), rng, horizon=0.01)
    assert not h.absorbed
    assert h.final_time == 0.01
    assert np.all(h.times <= 0.01)


def test_block_count_and_frequency(rng):
    h = simulate(500, lc.LambdaModel.beta(1.5), rng)
    assert block_count(h, 1e-12) == 500
    assert block_count(h, h.final_time + 1) == 1
    assert frequency_of_one(h, h.final_time + 1) == 1.0
    with pytest.raises(DomainError):
        block_count(h, 0.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32), eps=st.floats(0.001, 0.05), r=st.floats(0.0, 0.99))
def test_Z_matches_direct_recount(seed, eps, r):
    h = simulate(2000, lc.LambdaModel.beta(1.6), stream(seed, "z"), horizon=0.2)
    z = extract_Z(h, eps)
    assert z.values[0] == 1
    assert np.all(np.diff(z.values) > 0)
    # right-continuous path at r versus the recount at time (1-r) eps
    s = (1 - r) * eps
    if not np.any(np.isclose(h.times, s, rtol=0, atol=1e-15)):
        assert z(r) == ancestor_count(h, eps, s)


def test_Z_at_zero_is_one_and_kingman_jumps_unit(rng):
    h = simulate(5000, lc.LambdaModel.kingman(), rng, horizon=0.01)
    z = extract_Z(h, 1e-3)
    assert z(0.0) == 1
    assert set(np.diff(z.values).tolist()) <= {1}


def test_extract_beyond_horizon_raises(rng):
    h = simulate(1000, lc.LambdaModel.kingman(), rng, horizon=0.001)
    with pytest.raises(DomainError):
        extract_Z(h, 0.01)


def test_evans_space_is_ultrametric_with_merge_times(rng):
    h = simulate(40, lc.LambdaModel.beta(1.5), rng)
    sp = evans_space(h)
    D = sp.distance_matrix()
    assert sp.n_leaves == 40
    assert ultrametric_ok(D)
    # distance between labels i, j is the time the block of i first contains j
    for i, j in [(0, 5), (3, 17), (10, 39)]:
        t = min(tt for tt in h.times if h.block_at(i + 1, tt) == h.block_at(j + 1, tt))
        assert D[i, j] == t
    assert sp.total_mass() == pytest.approx(1.0)


def test_evans_space_resolution_blocks(rng):
    h = simulate(300, lc.LambdaModel.kingman(), rng)
    sp = evans_space(h, radius=h.final_time, resolution=0.05)
    assert sp.n_leaves == block_count(h, 0.05)
    assert sp.total_mass() == pytest.approx(1.0)
