"""Lambda measures and the coalescent / limit-process rates they induce.

A Lambda-coalescent with ``n`` blocks merges any particular ``k`` of them at
rate ``lambda_{n,k} = int_0^1 p^{k-2} (1-p)^{n-k} Lambda(dp)``.  The total
rate of ``k``-mergers is ``gamma_{n,k} = C(n,k) lambda_{n,k}``.

Gamma functions and binomials are always combined in log space; with
``n`` up to 1e6 the individual factors overflow long before the rates do.
"""

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericError

KINGMAN = "kingman"
BETA = "beta"
TABULATED = "tabulated"

QUAD_ABS_TOL = 1e-10


@dataclass(frozen=True)
class LambdaModel:
    """A finite measure on [0, 1] with its regular-variation parameters.

    Use the constructors :meth:`kingman`, :meth:`beta` and :meth:`tabulated`
    rather than the raw initializer.
    """

    kind: str
    alpha: float
    a_lambda: float
    total_mass: float
    values: tuple = field(default=(), repr=False)

    @classmethod
    def kingman(cls):
        return cls(KINGMAN, 2.0, 1.0, 1.0)

    @classmethod
    def beta(cls, alpha):
        alpha = float(alpha)
        if not 1.0 < alpha < 2.0:
            raise DomainError(f"Beta(2-alpha, alpha) needs alpha in (1, 2), got {alpha}")
        a_lambda = math.exp(-special.betaln(2.0 - alpha, alpha))
        return cls(BETA, alpha, a_lambda, 1.0)

    @classmethod
    def tabulated(cls, values, alpha, a_lambda):
        """Density tabulated at ``p_i = (i+1)/m``, ``i = 0..m-1``.

        Below the first grid point the density is continued by the power law
        ``f(p0) (p/p0)^(1-alpha)``; the declared ``a_lambda`` is only checked
        by :func:`srv_diagnostic`.
        """
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise DomainError("tabulated density needs at least two grid values")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise DomainError("tabulated density values must be finite and nonnegative")
        alpha = float(alpha)
        if not 1.0 < alpha < 2.0:
            raise DomainError(f"alpha must lie in (1, 2), got {alpha}")
        if a_lambda <= 0:
            raise DomainError("a_lambda must be positive")
        model = cls(TABULATED, alpha, float(a_lambda), 1.0, tuple(vals.tolist()))
        mass = _tabulated_integral(model, 0.0, 0.0)
        object.__setattr__(model, "total_mass", mass)
        return model

    @property
    def grid(self):
        m = len(self.values)
        return np.arange(1, m + 1) / m

    def density(self, p):
        """Density of Lambda at ``p`` (not defined for the Kingman atom)."""
        p = np.asarray(p, dtype=float)
        if self.kind == KINGMAN:
            raise DomainError("Kingman's Lambda is an atom at 0 and has no density")
        if self.kind == BETA:
            a = self.alpha
            return self.a_lambda * p ** (1 - a) * (1 - p) ** (a - 1)
        grid = self.grid
        vals = np.asarray(self.values)
        head = vals[0] * (p / grid[0]) ** (1 - self.alpha)
        return np.where(p < grid[0], head, np.interp(p, grid, vals))


def srv_diagnostic(model, points=5):
    """Ratio ``f(p) / (A p^(1-alpha))`` at the smallest tabulated points.

    Values near 1 mean the declared head is consistent with the table.
    """
    if model.kind != TABULATED:
        return np.ones(points)
    p = model.grid[:points]
    vals = np.asarray(model.values[:points])
    return vals / (model.a_lambda * p ** (1 - model.alpha))


def _check_nk(n, k):
    if n < 2 or k < 2 or k > n:
        raise DomainError(f"need 2 <= k <= n, got n={n}, k={k}")


def _tabulated_integral(model, a, b):
    """``int_0^1 p^a (1-p)^b f(p) dp`` for a tabulated density.

    The power-law head on ``[0, p0]`` is integrated in closed form with the
    regularized incomplete beta function; the piecewise-linear body by
    adaptive quadrature, cell block by cell block.
    """
    grid = model.grid
    vals = np.asarray(model.values)
    p0 = grid[0]
    s = a + 1.0 - model.alpha + 1.0
    head = vals[0] * p0 ** (model.alpha - 1.0)
    head *= math.exp(special.betaln(s, b + 1.0)) * special.betainc(s, b + 1.0, p0)

    def integrand(p):
        return p**a * (1.0 - p) ** b * np.interp(p, grid, vals)

    body = 0.0
    err_total = 0.0
    block = 40
    nodes = np.concatenate(([p0], grid[1:]))
    for start in range(0, len(nodes) - 1, block):
        stop = min(start + block, len(nodes) - 1)
        lo, hi = nodes[start], nodes[stop]
        inner = nodes[start + 1 : stop]
        val, err = integrate.quad(
            integrand, lo, hi, points=inner if inner.size else None,
            epsabs=QUAD_ABS_TOL / 10, epsrel=1e-12, limit=max(100, 4 * len(inner) + 50),
        )
        body += val
        err_total += err
    if err_total > QUAD_ABS_TOL:
        raise NumericError(
            f"quadrature did not reach {QUAD_ABS_TOL:g} (estimated error {err_total:g})",
            achieved_tolerance=err_total,
        )
    return head + body


def log_lambda_rate(n, k, model):
    _check_nk(n, k)
    if model.kind == KINGMAN:
        return 0.0 if k == 2 else -math.inf
    if model.kind == BETA:
        a = model.alpha
        return special.betaln(k - a, n - k + a) - special.betaln(2 - a, a)
    val = _tabulated_integral(model, k - 2.0, float(n - k))
    return math.log(val) if val > 0 else -math.inf


def lambda_rate(n, k, model):
    """Rate at which one particular set of ``k`` blocks merges, out of ``n``."""
    return math.exp(log_lambda_rate(n, k, model))


def log_binomial(n, k):
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


def gamma_rate(n, k, model):
    """Total rate of ``k``-mergers when ``n`` blocks are present."""
    val = math.exp(log_binomial(n, k) + log_lambda_rate(n, k, model))
    if not math.isfinite(val):
        raise NumericError(f"gamma_{{{n},{k}}} overflows double precision")
    return val


class _RowCache:
    """Size-bounded LRU of per-``n`` rate rows, safe to share across threads."""

    def __init__(self, max_rows=100_000):
        self.max_rows = max_rows
        self._rows = OrderedDict()
        self._lock = threading.Lock()

    def get(self, model, n):
        key = (model, n)
        with self._lock:
            row = self._rows.get(key)
            if row is not None:
                self._rows.move_to_end(key)
                return row
        row = _compute_gamma_row(model, n)
        with self._lock:
            self._rows[key] = row
            while len(self._rows) > self.max_rows:
                self._rows.popitem(last=False)
        return row

    def clear(self):
        with self._lock:
            self._rows.clear()


def _compute_gamma_row(model, n):
    k = np.arange(2, n + 1)
    if model.kind == KINGMAN:
        row = np.zeros(k.size)
        row[0] = n * (n - 1) / 2.0
    elif model.kind == BETA:
        a = model.alpha
        logs = (
            log_binomial(n, k)
            + special.betaln(k - a, n - k + a)
            - special.betaln(2 - a, a)
        )
        row = np.exp(logs)
    else:
        row = np.array([gamma_rate(n, int(kk), model) for kk in k])
    row.setflags(write=False)
    return row


ROW_CACHE = _RowCache()


def gamma_row(n, model):
    """``gamma_{n,k}`` for ``k = 2..n`` as a read-only array (cached)."""
    if n < 2:
        return np.zeros(0)
    return ROW_CACHE.get(model, int(n))


def total_rate(n, model):
    """Total merger rate with ``n`` blocks; zero for a single block."""
    if n < 2:
        return 0.0
    return float(np.sum(gamma_row(n, model)))


def total_rates(n_max, model):
    """``total_rate(b)`` for ``b = 0..n_max`` in O(n_max).

    Uses ``total(b+1) - total(b) = b * lambda_{b+1,2}``, which follows from
    ``sum_k C(b,k) p^k (1-p)^(b-k)`` telescoping in ``b``.
    """
    b = np.arange(n_max + 1, dtype=float)
    out = np.zeros(n_max + 1)
    if n_max < 2:
        return out
    if model.kind == KINGMAN:
        return b * (b - 1) / 2.0
    m = np.arange(1, n_max)
    if model.kind == BETA:
        a = model.alpha
        lam2 = np.exp(special.betaln(2 - a, m - 1 + a) - special.betaln(2 - a, a))
    else:
        lam2 = np.array([lambda_rate(int(mm) + 1, 2, model) for mm in m])
    out[2:] = np.cumsum(m * lam2)
    return out


def merger_size_pmf(n, model):
    """Law of the number of blocks taking part in the next merger."""
    row = np.asarray(gamma_row(n, model))
    return row / row.sum()


@dataclass(frozen=True)
class RateTable:
    """Dense ``lambda_{n,k}`` / ``gamma_{n,k}`` tables for ``2 <= k <= n <= n_max``.

    Row ``n`` column ``k`` holds the rate; entries with ``k < 2`` or
    ``k > n`` are zero.
    """

    n_max: int
    lam: np.ndarray
    gamma: np.ndarray
    total: np.ndarray

    @classmethod
    def build(cls, model, n_max):
        lam = np.zeros((n_max + 1, n_max + 1))
        gam = np.zeros_like(lam)
        for n in range(2, n_max + 1):
            row = np.asarray(gamma_row(n, model))
            k = np.arange(2, n + 1)
            gam[n, 2 : n + 1] = row
            lam[n, 2 : n + 1] = np.exp(np.log(np.where(row > 0, row, 1.0)) - log_binomial(n, k))
            lam[n, 2 : n + 1][row == 0] = 0.0
        total = gam.sum(axis=1)
        for arr in (lam, gam, total):
            arr.setflags(write=False)
        return cls(n_max, lam, gam, total)


def cdi_constant(alpha):
    """Coming-down-from-infinity constant ``alpha / Gamma(2 - alpha)``."""
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"cdi_constant needs alpha in (1, 2), got {alpha}")
    return alpha / special.gamma(2.0 - alpha)


def log_jump_weight(j, alpha):
    """``log(Gamma(j - alpha + 1) / Gamma(j + 2))``."""
    return special.gammaln(j - alpha + 1.0) - special.gammaln(j + 2.0)


def limit_jump_rate(i, j, r, model):
    """Rate of ``i -> i + j`` for the limit process Z at time ``r``.

    For ``alpha < 2`` this is the generator
    ``A (j+i) Gamma(2-alpha) Gamma(j-alpha+1) / ((1-r) alpha Gamma(j+2))``;
    for Kingman only unit jumps occur, at rate ``(i+1)/(1-r)``.
    """
    if i < 1 or j < 1:
        raise DomainError("states and jump sizes are positive integers")
    if not 0.0 <= r < 1.0:
        raise DomainError(f"r must lie in [0, 1), got {r}")
    alpha = model.alpha
    if alpha == 2.0:
        return (i + 1) / (1.0 - r) if j == 1 else 0.0
    log_rate = (
        math.log(model.a_lambda)
        + math.log(j + i)
        + special.gammaln(2.0 - alpha)
        + log_jump_weight(j, alpha)
        - math.log(1.0 - r)
        - math.log(alpha)
    )
    return math.exp(log_rate)


def scale_invariant_a_lambda(alpha):
    """The ``a_lambda`` at which the generator prefactor equals ``alpha/Gamma(2-alpha)``.

    With this value the limit chain has unit per-particle branching rate and
    immigration rate ``1/(alpha-1)``, matching the Kingman case as
    ``alpha -> 2``.
    """
    return (alpha / special.gamma(2.0 - alpha)) ** 2
