import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from coaltangent import excursion as ex
from coaltangent import ghp
from coaltangent.errors import DomainError
from coaltangent.rng import stream

from conftest import ultrametric_ok


@settings(max_examples=50, deadline=None)
@given(z=st.floats(0.1, 10.0), t=st.floats(0.0, 1.0))
def test_time_change_constant_profile(z, t):
    lv = np.linspace(0.0, 1.0, 101)
    prof = ex.LocalTimeProfile(lv, np.full(lv.size, z), 0.01)
    assert ex.time_change_V(prof, t) == pytest.approx(4.0 * t / z, rel=1e-12, abs=1e-12)


def test_t_epsilon():
    lv = np.linspace(0.0, 1.0, 11)
    prof = ex.LocalTimeProfile(lv, np.full(lv.size, 2.0), 0.01)
    assert ex.t_epsilon(prof, 0.01) == pytest.approx(200.0)
    flat = ex.LocalTimeProfile(lv, np.full(lv.size, 100.0), 0.01)
    assert ex.t_epsilon(flat, 0.81) == pytest.approx(1 / 0.9)
    with pytest.raises(DomainError):
        ex.t_epsilon(prof, 1.5)


@settings(max_examples=60, deadline=None)
@given(gaps=st.lists(st.sampled_from([0.1, 0.2, 0.3, 0.5, 0.7, 1.0]), min_size=0, max_size=12))
def test_dendrogram_from_gaps_is_max_gap_metric(gaps):
    d = ex.dendrogram_from_gaps(gaps)
    D = d.distance_matrix()
    L = len(gaps) + 1
    for i in range(L):
        for j in range(i + 1, L):
            assert D[i, j] == max(gaps[i:j])
    assert ultrametric_ok(D)


def test_refine_keeps_coarse_points_and_variance(rng):
    p = ex.simulate_two_sided_bm(1.0, 1e-3, rng)
    q = ex.refine_path(p, rng, factor=5)
    np.testing.assert_array_equal(q.values[::5], p.values)
    assert q.origin_index == 5 * p.origin_index
    inc = np.diff(q.values)
    assert inc.var() == pytest.approx(q.dt, rel=0.05)


def test_pathgrid_csv_round_trip(tmp_path, rng):
    p = ex.simulate_two_sided_bm(0.01, 1e-4, rng)
    p.metadata["seed"] = 5
    p.to_csv(tmp_path / "w.csv")
    q = ex.PathGrid.from_csv(tmp_path / "w.csv")
    np.testing.assert_array_equal(p.values, q.values)
    assert (q.dt, q.origin_index, q.metadata["seed"]) == (p.dt, p.origin_index, 5)


def test_bm_local_time_at_zero_mean():
    # E L_1(0) = sqrt(2/pi) for the occupation-density local time
    lt = [ex.local_time_at(ex.simulate_two_sided_bm(1.0, 1e-4, stream(2, "lt", i)).values[10_000:], 1e-4, 0.0)
          for i in range(400)]
    assert np.mean(lt) == pytest.approx(math.sqrt(2 / math.pi), abs=4 * np.std(lt) / 20 + 0.02)


def test_local_time_profile_matches_pointwise(rng):
    p = ex.simulate_two_sided_bm(0.5, 1e-4, rng)
    prof = ex.local_time_profile(p, [-0.2, 0.0, 0.1])
    for x, v in zip(prof.levels, prof.local_time):
        assert v == pytest.approx(ex.local_time_at(p.values, p.dt, x))


def test_conditioned_excursion_shape(rng):
    f = ex.conditioned_excursion(rng, 1e-4)
    assert f.values[0] == 0.0 and f.values[-1] <= 0.0
    assert np.all(f.values[1:-1] > 0)
    assert f.values.max() >= 1.0
    assert ex.hitting_time(f, 1.0) == pytest.approx(f.metadata["hit_index"] * f.dt)


@pytest.mark.slow
def test_conditioned_local_time_is_exponential():
    ell = [ex.local_time_at(ex.conditioned_excursion(stream(4, "ce", i), 1e-4).values, 1e-4, 1.0)
           for i in range(300)]
    assert stats.kstest(ell, stats.expon(scale=2.0).cdf).statistic < 0.1


@pytest.mark.slow
def test_rejection_oracle_agrees_with_williams():
    a = [ex.local_time_at(ex.rejection_excursion(stream(5, "rej", i), 1e-4, 0.05).values, 1e-4, 1.0)
         for i in range(150)]
    b = [ex.local_time_at(ex.conditioned_excursion(stream(5, "wil", i), 1e-4).values, 1e-4, 1.0)
         for i in range(150)]
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_straddling_excursion(rng):
    W = ex.sample_W_ball(1e-4, rng)
    Y = ex.straddling_excursion(W, -1.0)
    assert Y.values[0] == 0.0 and Y.values[-1] == 0.0
    assert np.all(Y.values[1:-1] > 0)
    assert Y.values[Y.origin_index] == pytest.approx(1.0)


def test_straddling_needs_crossings(rng):
    p = ex.simulate_two_sided_bm(1e-3, 1e-5, rng)
    with pytest.raises(Exception):
        ex.straddling_excursion(p.shifted(5.0), -1.0)
    Y = ex.straddling_excursion(p, -1.0, rng=rng)
    assert Y.values[0] == 0.0 and Y.values[-1] == 0.0


def test_excursion_leaves_resolution_guard(rng):
    f = ex.conditioned_excursion(rng, 1e-4)
    with pytest.raises(DomainError):
        ex.excursion_leaves(f, resolution=0.001)


def test_evans_space_from_excursion(rng):
    f = ex.conditioned_excursion(rng, 1e-5)
    space = ex.evans_space_from_excursion(f, rng=rng)
    ell = ex.local_time_at(f.values, f.dt, 1.0)
    assert space.total_mass() == pytest.approx(ell, rel=0.05, abs=1e-3)
    assert np.all(space.heights <= 1.0)
    assert ultrametric_ok(space.distance_matrix())
    small = ex.evans_space_from_excursion(f, max_points=4, rng=rng)
    assert small.n_leaves <= 4
    assert small.total_mass() == pytest.approx(space.total_mass())


def test_truncate_keeps_point_and_mass(rng):
    from coaltangent.dendrogram import random_dendrogram

    d = random_dendrogram(12, rng, masses=True)
    t = ex.truncate_by_mass(d, 5)
    assert t.n_leaves == 5
    assert t.total_mass() == pytest.approx(1.0)
    assert ex.truncate_by_mass(d, 20) is d


@pytest.mark.parametrize("seed", range(4))
def test_routes_agree(seed):
    W = ex.sample_W_ball(1e-5, stream(seed, "routes"))
    a = ex.limit_space_from_W(W, route="excursion")
    b = ex.limit_space_from_W(W, route="zeros")
    assert a.total_mass() == pytest.approx(b.total_mass(), rel=0.05, abs=1e-3)
    assert ghp.pointed_gh(ex.truncate_by_mass(a, 6), ex.truncate_by_mass(b, 6)) < 0.02


def test_ball_count_path_is_right_continuous(rng):
    W = ex.sample_W_ball(1e-5, rng)
    sp = ex.limit_space_from_W(W)
    path = ex.ball_count_path(sp, 0.01)
    for r in (0.0, 0.3, 0.6, 0.9):
        assert path(r) == sp.ball_count(1.0 - r)
    np.testing.assert_array_equal(ex.ball_counts(sp, [0.3, 0.6]), [path(0.3), path(0.6)])


def test_hausdorff_law_rate():
    assert ex.below_excursion_rate(2.0) == 0.25
    p = ex.excursion_hausdorff_law(1.0, 1.0, 200_000, stream(0, "hl"))
    assert p == pytest.approx(math.exp(-0.5), abs=0.005)
    assert ex.excursion_hausdorff_law(0.0, 1.0, 10, stream(0, "hl")) == 1.0


@pytest.mark.slow
def test_hausdorff_path_check():
    p = ex.excursion_hausdorff_path_check(0.5, 0.5, 400, 1e-4, stream(1, "hp"))
    assert p == pytest.approx(math.exp(-0.5), abs=0.08)


def test_scaled_family(rng):
    X = ex.conditioned_excursion(rng, 1e-5)
    prof = ex.local_time_profile(X, np.linspace(0.0, 1.0, 201))
    exc, Y, T = ex.scaled_excursion_family(X, 0.1, prof, rng)
    assert T >= 1 / math.sqrt(0.1)
    assert any(e is Y for e in exc)
    for e in exc:
        assert e.values.max() >= 1.0
        assert e.values[0] == 0.0 and e.values[-1] == 0.0
