"""Limit objects: the jump process Z, its time change Y, the tree B(o,1), and X.

For ``alpha < 2`` write ``w_j = Gamma(j+1-alpha)/Gamma(j+2)``.  The chain Y
jumps ``i -> i+j`` at rate ``c (i+j) w_j`` with ``c = A Gamma(2-alpha)/alpha``,
and ``Z(r) = Y(-log(1-r))``.  Two series make everything explicit::

    sum_j w_j     = Gamma(2-alpha) / alpha
    sum_j j w_j   = Gamma(2-alpha) / (alpha (alpha-1))

and both normalized laws have exact mixture representations, so jump sizes
are drawn without truncation:

* ``P(J=j) ∝ w_j``: ``U ~ Beta(2-alpha, alpha)``, ``J ~ Geometric(1-U)``;
* ``P(J=j) ∝ j w_j``: ``U ~ Beta(2-alpha, alpha-1)``, ``J = G1 + G2 - 1``
  with ``G1, G2`` i.i.d. ``Geometric(1-U)``.
"""

import csv
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import integrate, sparse, special, stats
from scipy.sparse.linalg import expm_multiply

from .coalescent import JumpPath
from .dendrogram import Dendrogram
from .errors import DomainError, NumericError
from .lambda_core import log_jump_weight
from .rng import kernel_seed

TAIL_TOL = 1e-9
# keeps geometric draws inside int64; affects jumps beyond ~1e15 only
_P_FLOOR = 1e-15


def _check_alpha(alpha, allow_two=True):
    if not (1.0 < alpha < 2.0 or (allow_two and alpha == 2.0)):
        raise DomainError(f"alpha must lie in (1, 2{']' if allow_two else ')'}, got {alpha}")


def weight_sums(alpha):
    """``(sum_j w_j, sum_j j w_j)`` in closed form."""
    s0 = special.gamma(2.0 - alpha) / alpha
    return s0, s0 / (alpha - 1.0)


def y_prefactor(alpha, a_lambda):
    return a_lambda * special.gamma(2.0 - alpha) / alpha


def y_total_rate(i, alpha, a_lambda):
    """Total jump rate of Y from state ``i``."""
    if alpha == 2.0:
        return i + 1.0
    s0, s1 = weight_sums(alpha)
    return y_prefactor(alpha, a_lambda) * (i * s0 + s1)


@dataclass(frozen=True)
class OffspringDist:
    """Truncated table of a jump-size law with its exact tail mass.

    ``support[m]`` is the index ``k`` of ``pmf[m]`` in the ``p_k`` / ``q_k``
    notation (a particle replaced by ``k`` particles, i.e. jump size ``k-1``).
    """

    alpha: float
    support: np.ndarray
    pmf: np.ndarray
    tail_mass: float
    normalizer: float
    kind: str = "offspring"

    def jump_sizes(self):
        return self.support - 1

    def sample(self, rng, size=None):
        """Exact draws of the index ``k`` (no truncation: see module notes)."""
        a = self.alpha
        if a == 2.0:
            return np.full(size, 2) if size is not None else 2
        if self.kind == "offspring":
            return sample_branch_jump(a, rng, size) + 1
        if self.kind == "immigration_jump":
            return sample_immigration_jump(a, rng, size) + 1
        # q_k ∝ k p_k, i.e. jump law ∝ (j+1) w_j = j w_j + w_j: a two-part mixture
        s0, s1 = weight_sums(a)
        pick = rng.random(size) < s1 / (s0 + s1)
        j = np.where(pick, sample_immigration_jump(a, rng, size), sample_branch_jump(a, rng, size))
        return j + 1


def _required_k(alpha, tail_scale):
    # w_k ~ k^(-1-alpha), so the tail beyond K is about K^(-alpha)/alpha
    return int(math.ceil((tail_scale / (alpha * TAIL_TOL)) ** (1.0 / alpha)))


def offspring_pmf(alpha, k_trunc):
    """``p_{k+1} ∝ w_k`` for ``k = 1..k_trunc``, normalized by ``sum_k w_k``."""
    if alpha == 2.0:
        return OffspringDist(2.0, np.array([2]), np.array([1.0]), 0.0, 1.0)
    _check_alpha(alpha, allow_two=False)
    k = np.arange(1, k_trunc + 1)
    s0, _ = weight_sums(alpha)
    pmf = np.exp(log_jump_weight(k, alpha)) / s0
    tail = max(0.0, 1.0 - math.fsum(pmf))
    if tail >= TAIL_TOL:
        raise DomainError(
            f"k_trunc={k_trunc} leaves tail mass {tail:.3g}; need about "
            f"{_required_k(alpha, 1.0 / s0)} terms for {TAIL_TOL:g}"
        )
    return OffspringDist(alpha, k + 1, pmf, tail, s0)


def immigrant_pmf(alpha, k_trunc):
    """Size-biased pick ``q_k ∝ k p_k`` for ``k = 2..k_trunc+1``.

    Note the index: ``q_k`` biases ``p_k`` by ``k``, the number of particles
    after the birth.  The immigration part of the generator instead biases
    the jump size ``j = k-1``; see :func:`immigration_jump_pmf`.  The tail
    here decays like ``k^(1-alpha)``, far too slowly for any table to reach
    the 1e-9 cut, so the tail mass is reported rather than enforced and
    :meth:`OffspringDist.sample` draws exactly beyond the table.
    """
    if alpha == 2.0:
        return OffspringDist(2.0, np.array([2]), np.array([1.0]), 0.0, 1.0, "immigrant")
    _check_alpha(alpha, allow_two=False)
    s0, s1 = weight_sums(alpha)
    norm = s1 + s0  # sum_k k p_k * s0 = sum_j (j+1) w_j
    k = np.arange(1, k_trunc + 1)
    pmf = (k + 1) * np.exp(log_jump_weight(k, alpha)) / norm
    tail = max(0.0, 1.0 - math.fsum(pmf))
    return OffspringDist(alpha, k + 1, pmf, tail, norm, "immigrant")


def immigration_jump_pmf(alpha, k_trunc):
    """Law of immigration jump sizes implied by the generator, ``∝ j w_j``.

    Returned with ``support = j + 1`` for consistency with the ``p_k`` tables.
    Truncation is not checked here because the tail decays only like
    ``j^(1-alpha)``; ``tail_mass`` reports it.
    """
    _check_alpha(alpha, allow_two=False)
    _, s1 = weight_sums(alpha)
    j = np.arange(1, k_trunc + 1)
    pmf = j * np.exp(log_jump_weight(j, alpha)) / s1
    return OffspringDist(alpha, j + 1, pmf, max(0.0, 1.0 - math.fsum(pmf)), s1, "immigration_jump")


def sample_branch_jump(alpha, rng, size=None):
    """Jump size with law ``∝ w_j`` (a particle gives birth to ``j``)."""
    u = rng.beta(2.0 - alpha, alpha, size)
    return rng.geometric(np.maximum(1.0 - u, _P_FLOOR))


def sample_immigration_jump(alpha, rng, size=None):
    """Jump size with law ``∝ j w_j``."""
    p = np.maximum(1.0 - rng.beta(2.0 - alpha, alpha - 1.0, size), _P_FLOOR)
    return rng.geometric(p) + rng.geometric(p) - 1


DEFAULT_CAP = 10**6


@numba.njit(cache=True)
def _y_kernel(alpha, c, s0, s1, t_max, cap, seed):
    np.random.seed(seed)
    times = [0.0]
    sizes = [0]
    times.pop()
    sizes.pop()
    t = 0.0
    i = 1
    while i <= cap:
        if alpha == 2.0:
            rate = i + 1.0
        else:
            rate = c * (i * s0 + s1)
        t += np.random.exponential(1.0) / rate
        if t > t_max:
            break
        if alpha == 2.0:
            j = 1
        elif np.random.random() * (i * s0 + s1) < i * s0:
            p = max(1.0 - np.random.beta(2.0 - alpha, alpha), _P_FLOOR)
            j = np.random.geometric(p)
        else:
            p = max(1.0 - np.random.beta(2.0 - alpha, alpha - 1.0), _P_FLOOR)
            j = np.random.geometric(p) + np.random.geometric(p) - 1
        times.append(t)
        sizes.append(j)
        i += j
    return np.array(times), np.array(sizes, dtype=np.int64), i > cap


@numba.njit(cache=True)
def _z_values_kernel(alpha, c, s0, s1, t_grid, reps, cap, seed):
    """Y sampled at the sorted times ``t_grid`` for ``reps`` independent paths."""
    np.random.seed(seed)
    out = np.empty((reps, t_grid.size), dtype=np.int64)
    for rep in range(reps):
        t = 0.0
        i = 1
        g = 0
        while g < t_grid.size:
            if i > cap:
                break
            rate = i + 1.0 if alpha == 2.0 else c * (i * s0 + s1)
            t += np.random.exponential(1.0) / rate
            while g < t_grid.size and t_grid[g] < t:
                out[rep, g] = i
                g += 1
            if g == t_grid.size:
                break
            if alpha == 2.0:
                j = 1
            elif np.random.random() * (i * s0 + s1) < i * s0:
                p = max(1.0 - np.random.beta(2.0 - alpha, alpha), _P_FLOOR)
                j = np.random.geometric(p)
            else:
                p = max(1.0 - np.random.beta(2.0 - alpha, alpha - 1.0), _P_FLOOR)
                j = np.random.geometric(p) + np.random.geometric(p) - 1
            i += j
        while g < t_grid.size:
            out[rep, g] = i
            g += 1
    return out


def sample_Z_values(alpha, a_lambda, rs, reps, rng, cap=DEFAULT_CAP):
    """``Z(r)`` at each ``r`` in ``rs`` for ``reps`` independent paths.

    Values above ``cap`` are censored (reported as the first state past it).
    """
    _check_alpha(alpha)
    rs = np.asarray(rs, dtype=float)
    if np.any(rs < 0) or np.any(rs >= 1) or np.any(np.diff(rs) < 0):
        raise DomainError("rs must be sorted values in [0, 1)")
    if alpha == 2.0:
        c, s0, s1 = 1.0, 1.0, 1.0
    else:
        c = y_prefactor(alpha, a_lambda)
        s0, s1 = weight_sums(alpha)
    return _z_values_kernel(float(alpha), c, s0, s1, -np.log1p(-rs), int(reps), int(cap),
                            kernel_seed(rng))


def _y_jumps(alpha, a_lambda, t_max, rng, cap):
    """Jump times and sizes of Y on ``[0, t_max]`` started from 1.

    Simulation stops once the state exceeds ``cap``; since Y is monotone,
    later values are then known only to exceed ``cap``.
    """
    if alpha == 2.0:
        c, s0, s1 = 1.0, 1.0, 1.0
    else:
        c = y_prefactor(alpha, a_lambda)
        s0, s1 = weight_sums(alpha)
    return _y_kernel(float(alpha), c, s0, s1, float(t_max), int(cap), kernel_seed(rng))


def _path(times, sizes, domain, censored, cap):
    meta = {"censored_above": int(cap)} if censored else {}
    return JumpPath(np.concatenate(([0.0], times)), np.concatenate(([1], 1 + np.cumsum(sizes))),
                    domain, meta)


def simulate_Y(alpha, a_lambda, t_max, rng, cap=DEFAULT_CAP):
    """Homogeneous chain Y on ``[0, t_max]`` from ``Y(0) = 1``."""
    _check_alpha(alpha)
    times, sizes, censored = _y_jumps(alpha, a_lambda, t_max, rng, cap)
    return _path(times, sizes, (0.0, t_max), censored, cap)


def simulate_Z(alpha, a_lambda, r_max, rng, cap=DEFAULT_CAP):
    """Sample path of Z on ``[0, r_max]`` via ``Z(r) = Y(-log(1-r))``.

    For ``alpha < 2`` the jump law has infinite mean, and rare paths
    explode; once the state exceeds ``cap`` the path stops and its metadata
    records ``censored_above`` (later values are lower bounds only).
    """
    _check_alpha(alpha)
    if not 0.0 <= r_max < 1.0:
        raise DomainError("r_max must lie in [0, 1)")
    times, sizes, censored = _y_jumps(alpha, a_lambda, -math.log1p(-r_max), rng, cap)
    return _path(-np.expm1(-times), sizes, (0.0, r_max), censored, cap)


def simulate_Z_thinning(alpha, a_lambda, r_max, rng, cap=DEFAULT_CAP):
    """Same law as :func:`simulate_Z`, simulated directly in ``r``.

    In state ``i`` the rate at ``r`` is ``lam_i/(1-r) <= lam_i/(1-r_max)``;
    proposals at the bound are accepted with probability ``(1-r_max)/(1-r)``.
    """
    _check_alpha(alpha)
    r, i = 0.0, 1
    times, values = [0.0], [1]
    if alpha < 2.0:
        s0, s1 = weight_sums(alpha)
    while i <= cap:
        bound = y_total_rate(i, alpha, a_lambda) / (1.0 - r_max)
        r += rng.exponential(1.0 / bound)
        if r > r_max:
            break
        if rng.random() * (1.0 - r) > 1.0 - r_max:
            continue
        if alpha == 2.0:
            j = 1
        else:
            if rng.random() * (i * s0 + s1) < i * s0:
                j = int(sample_branch_jump(alpha, rng))
            else:
                j = int(sample_immigration_jump(alpha, rng))
        i += j
        times.append(r)
        values.append(i)
    meta = {"censored_above": int(cap)} if i > cap else {}
    return JumpPath(np.array(times), np.array(values, dtype=np.int64), (0.0, r_max), meta)


@dataclass(frozen=True)
class ZMarginal:
    """``pmf[m] = P(Z(r) = m+1)`` for ``m+1 <= M``; ``leak = P(Z(r) > M)``."""

    r: float
    pmf: np.ndarray
    leak: float

    @property
    def states(self):
        return np.arange(1, self.pmf.size + 1)

    def normalized(self):
        return self.pmf / self.pmf.sum()

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["state", "probability"])
            for s, p in zip(self.states, self.pmf):
                w.writerow([int(s), repr(float(p))])
            w.writerow([f">{self.pmf.size}", repr(float(self.leak))])


def truncated_generator(alpha, a_lambda, m_trunc):
    """Generator of Y on ``{1..M}``; rows lose the mass that jumps past M."""
    i = np.arange(1, m_trunc + 1)
    Q = np.zeros((m_trunc, m_trunc))
    if alpha == 2.0:
        Q[i[:-1] - 1, i[:-1]] = i[:-1] + 1.0
    else:
        c = y_prefactor(alpha, a_lambda)
        j = np.arange(1, m_trunc)
        w = np.exp(log_jump_weight(j, alpha))
        for s in range(1, m_trunc):
            jj = j[: m_trunc - s]
            Q[s - 1, s - 1 + jj] = c * (s + jj) * w[: m_trunc - s]
    Q[i - 1, i - 1] = -np.array([y_total_rate(s, alpha, a_lambda) for s in i])
    return Q


def marginal_Z_oracle(alpha, a_lambda, r, m_trunc, max_leak=1e-6, method="radau"):
    """Law of ``Z(r)`` from the forward equations ``dp/dr = p Q / (1-r)``.

    Z only moves up, so the truncated system is exact on ``{1..M}``: the
    mass it loses is precisely ``P(Z(r) > M)``.  ``method="expm"`` uses the
    time change ``t = -log(1-r)`` and a matrix exponential action instead.
    """
    _check_alpha(alpha)
    if not 0.0 <= r < 1.0:
        raise DomainError("r must lie in [0, 1)")
    p0 = np.zeros(m_trunc)
    p0[0] = 1.0
    if r == 0.0:
        return ZMarginal(0.0, p0, 0.0)
    Q = truncated_generator(alpha, a_lambda, m_trunc)
    if method == "expm":
        p = expm_multiply(sparse.csr_matrix(Q.T) * (-math.log1p(-r)), p0)
    else:
        QT = Q.T.copy()
        sol = integrate.solve_ivp(
            lambda s, p: QT @ p / (1.0 - s), (0.0, r), p0, method="Radau",
            rtol=1e-9, atol=1e-12, jac=lambda s, p: QT / (1.0 - s),
        )
        if not sol.success:
            raise NumericError(f"forward equations failed: {sol.message}")
        p = sol.y[:, -1]
    p = np.clip(p, 0.0, None)
    leak = max(0.0, 1.0 - math.fsum(p))
    if leak > max_leak:
        raise NumericError(
            f"boundary leak {leak:.3g} exceeds {max_leak:g}; increase m_trunc (now {m_trunc})",
            achieved_tolerance=leak,
        )
    return ZMarginal(float(r), p, leak)


def kingman_Z_pmf(r, states):
    """``P(Z(r) = i) = i (1-r)^2 r^(i-1)`` for the Yule process with immigration."""
    i = np.asarray(states, dtype=float)
    return i * (1.0 - r) ** 2 * r ** (i - 1.0)


def build_limit_tree(zpath, eta, rng, point="uniform"):
    """The tree ``B(o,1)`` on the ``Z(1-eta)`` particles alive at ``r = 1-eta``.

    At each jump of size ``k`` a uniformly chosen living particle gives birth
    to ``k`` particles.  Two leaves whose lineages split at ``r`` are at
    distance ``1 - r``.  The distinguished point is a uniformly chosen leaf
    (``point="uniform"``) or the leaf continuing the initial particle
    (``point="root"``).
    """
    if not 0.0 < eta <= 1.0:
        raise DomainError("eta must lie in (0, 1]")
    r_end = 1.0 - eta
    if zpath.domain[1] < r_end:
        raise DomainError("the Z path must extend to r = 1 - eta")
    jt = zpath.times[1:]
    jumps = np.diff(zpath.values.astype(np.int64))
    keep = (jt <= r_end) & (jumps > 0)
    jt, jumps = jt[keep], jumps[keep]
    alive = 1
    parents = np.empty(jt.size, dtype=np.int64)
    for e, k in enumerate(jumps):
        parents[e] = rng.integers(alive)
        alive += int(k)
    n_leaves = alive
    if n_leaves == 1:
        return Dendrogram.singleton()
    # merge backwards in r: the latest birth is the lowest merge
    uf = np.arange(n_leaves)
    node_of = np.arange(n_leaves)

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    children, heights = [], []
    first_child = n_leaves
    for e in range(jt.size - 1, -1, -1):
        k = int(jumps[e])
        first_child -= k
        members = [find(int(parents[e]))] + [find(c) for c in range(first_child, first_child + k)]
        children.append(tuple(int(node_of[m]) for m in members))
        heights.append(1.0 - jt[e])
        top = members[0]
        for m in members[1:]:
            uf[m] = top
        node_of[top] = n_leaves + len(children) - 1
    pt = 0 if point == "root" else int(rng.integers(n_leaves))
    return Dendrogram(n_leaves, tuple(children), np.array(heights), pt)


def simulate_X(t0, t1, rng):
    """Compound Poisson path on ``[t0, t1]`` with jump rate ``2/t``.

    In the clock ``u = 2 log(t/t0)`` jumps arrive at unit rate; a jump at
    time ``t`` is exponential with mean ``2t``.  ``X(t0)`` is drawn from its
    Gamma(2, scale 2 t0) marginal since the rate explodes at 0.
    """
    if t0 <= 0:
        raise DomainError("t0 must be positive; the jump rate 2/t is not integrable at 0")
    if t1 <= t0:
        raise DomainError("need t1 > t0")
    u_max = 2.0 * math.log(t1 / t0)
    count = rng.poisson(u_max)
    u = np.sort(rng.uniform(0.0, u_max, count))
    t = t0 * np.exp(u / 2.0)
    sizes = rng.exponential(2.0 * t)
    x0 = rng.gamma(2.0, 2.0 * t0)
    return JumpPath(np.concatenate(([t0], t)), np.concatenate(([x0], x0 + np.cumsum(sizes))),
                    (t0, t1), {"jumps": int(count)})


def x_marginal_cdf(t, x):
    """CDF of ``X(t)``: Gamma with shape 2 and scale ``2t``."""
    if t <= 0:
        raise DomainError("t must be positive")
    return stats.gamma.cdf(x, 2.0, scale=2.0 * t)
