import math

import numpy as np
import pytest
from scipy import special, stats

from coaltangent import limits
from coaltangent.errors import DomainError, NumericError
from coaltangent.excursion import ball_count_path
from coaltangent.lambda_core import LambdaModel, limit_jump_rate, log_jump_weight
from coaltangent.rng import stream
from coaltangent.stats import empirical_pmf, ks_two_sample, total_variation

A15 = LambdaModel.beta(1.5).a_lambda


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_weight_sums_against_direct_series(alpha):
    j = np.arange(1, 2_000_001, dtype=float)
    w = np.exp(log_jump_weight(j, alpha))
    s0, s1 = limits.weight_sums(alpha)
    # tails: sum_{j>J} j^(-1-a) ~ J^(-a)/a and sum_{j>J} j^(-a) ~ J^(1-a)/(a-1)
    J = j[-1]
    assert w.sum() + J ** -alpha / alpha == pytest.approx(s0, rel=1e-6)
    assert (j * w).sum() + J ** (1 - alpha) / (alpha - 1) == pytest.approx(s1, rel=1e-3)


def test_y_rate_matches_generator():
    # total rate out of i equals the sum of the generator's jump rates (r = 0)
    m = LambdaModel.beta(1.5)
    j = np.arange(1, 4_000_001, dtype=float)
    w = np.exp(log_jump_weight(j, 1.5))
    c = m.a_lambda * special.gamma(0.5) / 1.5
    for i in (1, 4, 20):
        assert c * (i + 1) * w[0] == pytest.approx(limit_jump_rate(i, 1, 0.0, m), rel=1e-12)
        direct = c * math.fsum((i + j) * w)
        assert direct == pytest.approx(limits.y_total_rate(i, 1.5, m.a_lambda), rel=2e-3)


@pytest.mark.parametrize("alpha", [1.3, 1.7])
def test_exact_jump_samplers(alpha, rng):
    n = 200_000
    b = limits.sample_branch_jump(alpha, rng, n)
    im = limits.sample_immigration_jump(alpha, rng, n)
    s0, s1 = limits.weight_sums(alpha)
    j = np.arange(1, 9)
    pb = np.exp(log_jump_weight(j, alpha)) / s0
    pi = limits.immigration_jump_pmf(alpha, 8).pmf
    np.testing.assert_allclose(pi, j * np.exp(log_jump_weight(j, alpha)) / s1)
    for draws, p in ((b, pb), (im, pi)):
        emp = np.bincount(np.minimum(draws, 9), minlength=10)[1:9] / n
        assert np.all(np.abs(emp - p) <= 5 * np.sqrt(p / n) + 1e-4)


def test_offspring_truncation_error():
    with pytest.raises(DomainError):
        limits.offspring_pmf(1.5, 100)


def test_kingman_oracle_matches_closed_form():
    m = limits.marginal_Z_oracle(2.0, 1.0, 0.5, 200, max_leak=1e-12)
    np.testing.assert_allclose(m.pmf, limits.kingman_Z_pmf(0.5, m.states), atol=1e-9)
    assert m.pmf[0] == pytest.approx(0.25, abs=1e-9)


@pytest.mark.parametrize("r", [0.25, 0.5])
def test_radau_matches_expm(r):
    a = limits.marginal_Z_oracle(1.5, A15, r, 400, max_leak=1.0)
    b = limits.marginal_Z_oracle(1.5, A15, r, 400, max_leak=1.0, method="expm")
    np.testing.assert_allclose(a.pmf, b.pmf, atol=1e-8)
    assert a.leak == pytest.approx(b.leak, abs=1e-8)


def test_oracle_leak_guard():
    with pytest.raises(NumericError):
        limits.marginal_Z_oracle(1.5, A15, 0.9, 50, max_leak=1e-6)


@pytest.mark.parametrize("alpha,a_lam", [(2.0, 1.0), (1.5, A15)])
def test_sampled_marginals_match_oracle(alpha, a_lam, rng):
    rs = (0.25, 0.5)
    vals = limits.sample_Z_values(alpha, a_lam, rs, 40_000, rng)
    for col, r in enumerate(rs):
        m = limits.marginal_Z_oracle(alpha, a_lam, r, 1000, max_leak=1.0)
        # lumped above 30 so the empirical noise stays well below the tolerance
        oracle = np.concatenate((m.pmf[:30], [m.pmf[30:].sum() + m.leak]))
        assert total_variation(empirical_pmf(vals[:, col], 30), oracle) < 0.015


def test_thinning_and_time_change_agree():
    a = [limits.simulate_Z(1.5, A15, 0.6, stream(1, "tc", i))(0.6) for i in range(1500)]
    b = [limits.simulate_Z_thinning(1.5, A15, 0.6, stream(1, "th", i))(0.6) for i in range(1500)]
    assert ks_two_sample(a, b) < 0.07


def test_Z_paths_monotone_from_one(rng):
    for _ in range(50):
        z = limits.simulate_Z(1.5, A15, 0.9, rng)
        assert z.values[0] == 1
        assert np.all(np.diff(z.values) > 0)
        assert np.all((z.times >= 0) & (z.times <= 0.9))


def test_censoring_is_flagged(rng):
    z = limits.simulate_Z(1.2, LambdaModel.beta(1.2).a_lambda, 0.99, rng, cap=5)
    assert z.metadata.get("censored_above") == 5 or z.values[-1] <= 5


def test_limit_tree_matches_its_path(rng):
    for _ in range(30):
        z = limits.simulate_Z(2.0, 1.0, 0.99, rng)
        tree = limits.build_limit_tree(z, 0.01, rng)
        assert tree.n_leaves == z(0.99)
        assert np.all(tree.heights >= 0.01) and np.all(tree.heights <= 1.0)
        if tree.n_leaves > 1:
            bp = ball_count_path(tree, 0.01)
            for r in (0.1, 0.5, 0.9):
                assert bp(r) == z(r)


def test_limit_tree_beta_multiple_births(rng):
    z = limits.simulate_Z(1.5, A15, 0.95, rng)
    tree = limits.build_limit_tree(z, 0.05, rng, point="root")
    assert tree.n_leaves == z(0.95)


def test_X_marginal_and_jump_counts(rng):
    xs = [limits.simulate_X(1.0, math.e, rng) for _ in range(3000)]
    end = np.array([x(math.e) for x in xs])
    assert stats.kstest(end, lambda v: limits.x_marginal_cdf(math.e, v)).statistic < 0.04
    counts = np.array([x.metadata["jumps"] for x in xs])
    assert counts.mean() == pytest.approx(2.0, abs=0.15)


def test_X_domain_errors(rng):
    with pytest.raises(DomainError):
        limits.simulate_X(0.0, 1.0, rng)
    with pytest.raises(DomainError):
        limits.simulate_X(2.0, 1.0, rng)
