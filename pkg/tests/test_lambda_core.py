import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from coaltangent import lambda_core as lc
from coaltangent.errors import DomainError
from coaltangent.suites import quadrature_lambda


def test_kingman_rates():
    m = lc.LambdaModel.kingman()
    assert lc.lambda_rate(5, 2, m) == 1.0
    assert lc.lambda_rate(5, 3, m) == 0.0
    assert lc.gamma_rate(5, 2, m) == pytest.approx(10.0, rel=1e-14)
    assert lc.total_rate(7, m) == 21.0


def test_beta_small_values_closed_form():
    # Beta(1/2, 3/2): lambda_{3,2} = B(1/2,5/2)/B(1/2,3/2) = 3/4, lambda_{3,3} = B(3/2,3/2)/B(1/2,3/2) = 1/4
    m = lc.LambdaModel.beta(1.5)
    assert lc.lambda_rate(2, 2, m) == pytest.approx(1.0, rel=1e-14)
    assert lc.lambda_rate(3, 2, m) == pytest.approx(0.75, rel=1e-14)
    assert lc.lambda_rate(3, 3, m) == pytest.approx(0.25, rel=1e-14)
    assert lc.total_rate(3, m) == pytest.approx(2.5, rel=1e-14)


@pytest.mark.parametrize("alpha", [1.1, 1.5, 1.9])
@pytest.mark.parametrize("n,k", [(2, 2), (10, 2), (10, 7), (60, 31), (100, 100)])
def test_beta_lambda_matches_quadrature(alpha, n, k):
    m = lc.LambdaModel.beta(alpha)
    assert lc.lambda_rate(n, k, m) == pytest.approx(quadrature_lambda(n, k, alpha), rel=1e-8)


def test_lambda_recursion_consistency():
    # lambda_{n,k} = lambda_{n+1,k} + lambda_{n+1,k+1} (split on the extra block)
    m = lc.LambdaModel.beta(1.3)
    for n in range(2, 40):
        for k in range(2, n + 1):
            lhs = lc.lambda_rate(n, k, m)
            rhs = lc.lambda_rate(n + 1, k, m) + lc.lambda_rate(n + 1, k + 1, m)
            assert lhs == pytest.approx(rhs, rel=1e-12)


def test_total_rates_telescoping_matches_rows():
    m = lc.LambdaModel.beta(1.7)
    tot = lc.total_rates(300, m)
    for b in (2, 3, 17, 128, 300):
        assert tot[b] == pytest.approx(lc.total_rate(b, m), rel=1e-11)


def test_large_n_is_finite():
    m = lc.LambdaModel.beta(1.5)
    row = lc.gamma_row(10**6, m)
    assert np.all(np.isfinite(row))
    assert lc.total_rates(10**6, m)[-1] > 0


def test_rate_table():
    m = lc.LambdaModel.beta(1.5)
    t = lc.RateTable.build(m, 12)
    assert t.gamma[12, 5] == pytest.approx(lc.gamma_rate(12, 5, m), rel=1e-13)
    assert t.lam[7, 3] == pytest.approx(lc.lambda_rate(7, 3, m), rel=1e-12)
    assert t.gamma[5, 6] == 0.0
    with pytest.raises(ValueError):
        t.gamma[3, 2] = 1.0


def test_tabulated_matches_beta():
    alpha = 1.5
    beta = lc.LambdaModel.beta(alpha)
    grid = np.arange(1, 4001) / 4000
    vals = beta.density(np.minimum(grid, 1 - 1e-12))
    tab = lc.LambdaModel.tabulated(vals, alpha, beta.a_lambda)
    assert tab.total_mass == pytest.approx(1.0, rel=1e-3)
    assert lc.lambda_rate(20, 3, tab) == pytest.approx(lc.lambda_rate(20, 3, beta), rel=1e-3)
    np.testing.assert_allclose(lc.srv_diagnostic(tab), 1.0, rtol=1e-2)


def test_cdi_constant_value():
    assert lc.cdi_constant(1.5) == pytest.approx(1.5 / math.sqrt(math.pi), rel=1e-14)


def test_limit_jump_rate_kingman_and_beta():
    k = lc.LambdaModel.kingman()
    assert lc.limit_jump_rate(3, 1, 0.5, k) == pytest.approx(8.0)
    assert lc.limit_jump_rate(3, 2, 0.5, k) == 0.0
    b = lc.LambdaModel.beta(1.5)
    a = 1.5
    expect = b.a_lambda * 4 * special.gamma(2 - a) * special.gamma(2 - a + 1) / (0.5 * a * special.gamma(4))
    assert lc.limit_jump_rate(2, 2, 0.5, b) == pytest.approx(expect, rel=1e-12)


@pytest.mark.parametrize("bad", [(1, 2), (3, 1), (3, 4)])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        lc.lambda_rate(*bad, lc.LambdaModel.kingman())
    with pytest.raises(DomainError):
        lc.LambdaModel.beta(2.0)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(1.05, 1.95), n=st.integers(2, 400))
def test_merger_pmf_is_a_law(alpha, n):
    p = lc.merger_size_pmf(n, lc.LambdaModel.beta(alpha))
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(1.05, 1.95), n=st.integers(3, 2000))
def test_total_rate_increasing(alpha, n):
    m = lc.LambdaModel.beta(alpha)
    assert lc.total_rate(n, m) > lc.total_rate(n - 1, m)
