"""Empirical distances between samples and reference laws (thin wrappers over scipy)."""

import numpy as np
from scipy import stats as sps

from .errors import DomainError


def _nonempty(*arrays):
    out = []
    for a in arrays:
        a = np.asarray(a, dtype=float).ravel()
        if a.size == 0:
            raise DomainError("empty sample")
        out.append(a)
    return out


def ks_two_sample(a, b):
    a, b = _nonempty(a, b)
    return float(sps.ks_2samp(a, b).statistic)


def ks_one_sample(a, cdf):
    (a,) = _nonempty(a)
    return float(sps.kstest(a, cdf).statistic)


def wasserstein1(a, b):
    a, b = _nonempty(a, b)
    return float(sps.wasserstein_distance(a, b))


def total_variation(p, q):
    p, q = _nonempty(p, q)
    if p.shape != q.shape:
        raise DomainError("pmfs must share their support")
    return 0.5 * float(np.abs(p - q).sum())


def empirical_pmf(values, support_max):
    """Frequencies on ``1..support_max`` plus one lumped cell for larger values."""
    (v,) = _nonempty(values)
    v = v.astype(np.int64)
    if v.min() < 1:
        raise DomainError("values must be positive integers")
    counts = np.bincount(np.minimum(v, support_max + 1), minlength=support_max + 2)[1:]
    return counts / v.size


def poisson_gof_pvalue(counts, mu, min_expected=5.0):
    """Chi-square goodness of fit of integer counts to Poisson(``mu``).

    Cells with small expected counts are pooled into the upper tail.
    """
    (c,) = _nonempty(counts)
    c = c.astype(np.int64)
    n = c.size
    k_max = 0
    while n * sps.poisson.sf(k_max, mu) >= min_expected:
        k_max += 1
    obs = np.bincount(np.minimum(c, k_max), minlength=k_max + 1).astype(float)
    exp = n * sps.poisson.pmf(np.arange(k_max + 1), mu)
    exp[-1] = n * sps.poisson.sf(k_max - 1, mu)
    if k_max < 1:
        raise DomainError("sample too small for a chi-square test")
    return float(sps.chisquare(obs, exp).pvalue)
