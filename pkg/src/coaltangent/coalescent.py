"""Event-driven simulation of Lambda-coalescents and path extraction.

Blocks carry integer ids: ``0..n-1`` are the singletons ``{1}..{n}`` (label
``i`` is block ``i-1``), and the block created by event ``e`` gets id
``n+e``.  The history stores, per event, its time, the merged ids and
nothing else; block counts, block sizes and lineages are derived from it.
"""

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numba
import numpy as np

from . import lambda_core as lc
from .dendrogram import Dendrogram
from .errors import DomainError
from .rng import kernel_seed

KIND_CODE = {lc.KINGMAN: 0, lc.BETA: 1}


@numba.njit(cache=True)
def _beta_merger_size(b, alpha, total_b, u):
    # walk P(k) upwards from k=2 using the ratio of consecutive gamma_{b,k}
    logp = (
        math.lgamma(b + 1.0) - math.lgamma(3.0) - math.lgamma(b - 1.0)
        + math.lgamma(2.0 - alpha) + math.lgamma(b - 2.0 + alpha) - math.lgamma(b)
        - (math.lgamma(2.0 - alpha) + math.lgamma(alpha) - math.lgamma(2.0))
    )
    p = math.exp(logp) / total_b
    cum = p
    k = 2
    while cum < u and k < b:
        p *= (b - k) * (k - alpha) / ((k + 1.0) * (b - k - 1.0 + alpha))
        cum += p
        k += 1
    return k


@numba.njit(cache=True)
def _run(n, kind, alpha, totals, horizon, seed, times, ks, merged):
    """Run until one block remains or time passes ``horizon``.

    Returns ``(events, merged_used, final_time)``.
    """
    np.random.seed(seed)
    active = np.arange(n)
    b = n
    t = 0.0
    e = 0
    off = 0
    while b > 1:
        rate = totals[b]
        t_new = t + np.random.exponential(1.0) / rate
        if t_new > horizon:
            return e, off, horizon
        if t_new <= t:
            t_new = np.nextafter(t, np.inf)
        t = t_new
        if kind == 0:
            k = 2
        else:
            k = _beta_merger_size(b, alpha, rate, np.random.random())
        # partial Fisher-Yates: the chosen blocks end up in active[0:k]
        for i in range(k):
            j = i + np.random.randint(b - i)
            tmp = active[i]
            active[i] = active[j]
            active[j] = tmp
            merged[off + i] = active[i]
        times[e] = t
        ks[e] = k
        off += k
        nb = b - k + 1
        active[0] = n + e
        dst = 1
        src = b - 1
        stop = nb if nb > k else k
        while src >= stop:
            active[dst] = active[src]
            dst += 1
            src -= 1
        b = nb
        e += 1
    return e, off, t


@numba.njit(cache=True)
def _block_sizes(n, ks, offsets, merged):
    m = ks.size
    size = np.ones(n + m, dtype=np.int64)
    for e in range(m):
        s = 0
        for i in range(offsets[e], offsets[e + 1]):
            s += size[merged[i]]
        size[n + e] = s
    return size


def _alias_table(p):
    """Walker alias table for a finite distribution."""
    k = p.size
    prob = p * k / p.sum()
    alias = np.zeros(k, dtype=np.int64)
    small = [i for i in range(k) if prob[i] < 1.0]
    large = [i for i in range(k) if prob[i] >= 1.0]
    while small and large:
        s, l = small.pop(), large.pop()
        alias[s] = l
        prob[l] -= 1.0 - prob[s]
        (small if prob[l] < 1.0 else large).append(l)
    for i in small + large:
        prob[i] = 1.0
    return prob, alias


def _run_generic(n, model, horizon, rng, times, ks, merged):
    """Pure-Python Gillespie loop with cached alias tables per block count."""
    active = list(range(n))
    tables = {}
    b, t, e, off = n, 0.0, 0, 0
    while b > 1:
        rate = lc.total_rate(b, model)
        t_new = t + rng.exponential() / rate
        if t_new > horizon:
            return e, off, horizon
        t = t_new if t_new > t else np.nextafter(t, np.inf)
        if b not in tables:
            tables[b] = _alias_table(np.asarray(lc.gamma_row(b, model)))
        prob, alias = tables[b]
        i = int(rng.integers(prob.size))
        k = 2 + (i if rng.random() < prob[i] else int(alias[i]))
        pick = rng.choice(b, size=k, replace=False)
        chosen = [active[j] for j in pick]
        for j in sorted(pick, reverse=True):
            active[j] = active[-1]
            active.pop()
        merged[off:off + k] = chosen
        active.append(n + e)
        times[e], ks[e] = t, k
        off += k
        b = b - k + 1
        e += 1
    return e, off, t


@dataclass(frozen=True, eq=False)
class CoalescentHistory:
    """Timed merger events over ``n`` initial labels.

    ``merged[offsets[e]:offsets[e+1]]`` are the ids merged by event ``e``
    into the new block ``n + e``.
    """

    n: int
    times: np.ndarray
    ks: np.ndarray
    offsets: np.ndarray
    merged: np.ndarray
    final_time: float
    absorbed: bool
    model: lc.LambdaModel | None = field(default=None, repr=False)

    @property
    def n_events(self):
        return int(self.times.size)

    @property
    def events(self):
        """``(time, merged_ids, new_id)`` per event."""
        return [
            (float(self.times[e]), frozenset(self.merged[self.offsets[e]:self.offsets[e + 1]].tolist()),
             self.n + e)
            for e in range(self.n_events)
        ]

    @cached_property
    def counts(self):
        """Block count after each event."""
        return self.n - np.cumsum(self.ks - 1)

    @cached_property
    def sizes(self):
        return _block_sizes(self.n, self.ks, self.offsets, self.merged)

    @cached_property
    def parent(self):
        par = np.full(self.n + self.n_events, -1, dtype=np.int64)
        ev = np.repeat(np.arange(self.n_events), self.ks)
        par[self.merged[: self.offsets[-1]]] = self.n + ev
        return par

    def birth_time(self, block):
        return 0.0 if block < self.n else float(self.times[block - self.n])

    def children(self, block):
        if block < self.n:
            return np.zeros(0, dtype=np.int64)
        e = block - self.n
        return self.merged[self.offsets[e]:self.offsets[e + 1]]

    def block_at(self, label, t):
        """Id of the block containing ``label`` at time ``t`` (right-continuous)."""
        if not 1 <= label <= self.n:
            raise DomainError(f"label {label} outside 1..{self.n}")
        node = label - 1
        par = self.parent
        while par[node] >= 0 and self.times[par[node] - self.n] <= t:
            node = par[node]
        return int(node)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["event_index", "time", "k", "new_block_id", "block_ids"])
            for e in range(self.n_events):
                ids = self.merged[self.offsets[e]:self.offsets[e + 1]]
                w.writerow([e, repr(float(self.times[e])), int(self.ks[e]), self.n + e,
                            " ".join(str(int(i)) for i in ids)])


def simulate(n, model, rng, horizon=math.inf, engine="auto"):
    """Simulate the coalescent on ``n`` labels until one block or ``horizon``.

    ``engine`` is ``"numba"`` (Kingman and Beta only), ``"generic"`` (any
    model; alias-table sampling of merger sizes) or ``"auto"``.
    """
    if n < 2:
        raise DomainError("need at least two labels")
    if horizon < 0:
        raise DomainError("horizon must be nonnegative")
    times = np.zeros(n - 1)
    ks = np.zeros(n - 1, dtype=np.int64)
    merged = np.zeros(2 * n, dtype=np.int64)
    if engine == "auto":
        engine = "numba" if model.kind in KIND_CODE else "generic"
    if engine == "numba":
        if model.kind not in KIND_CODE:
            raise DomainError("the compiled engine handles Kingman and Beta models only")
        totals = lc.total_rates(n, model)
        m, off, tf = _run(n, KIND_CODE[model.kind], model.alpha, totals, float(horizon),
                          kernel_seed(rng), times, ks, merged)
    else:
        m, off, tf = _run_generic(n, model, horizon, rng, times, ks, merged)
    ks = ks[:m].copy()
    offsets = np.concatenate(([0], np.cumsum(ks)))
    absorbed = bool(m > 0 and n - int(np.sum(ks - 1)) == 1)
    return CoalescentHistory(n, times[:m].copy(), ks, offsets, merged[:off].copy(),
                             float(tf), absorbed, model)


# -- queries ------------------------------------------------------------------------


def block_count(history, t):
    """Number of blocks ``N(t)``; ``n`` before the first event."""
    if t <= 0:
        raise DomainError("block counts are queried at positive times")
    i = int(np.searchsorted(history.times, t, side="right"))
    return history.n if i == 0 else int(history.counts[i - 1])


def frequency_of_one(history, t, label=1):
    """Empirical frequency ``|block containing label| / n`` at time ``t``."""
    if t <= 0:
        raise DomainError("frequencies are queried at positive times")
    return history.sizes[history.block_at(label, t)] / history.n


@dataclass(frozen=True, eq=False)
class JumpPath:
    """Right-continuous step function ``value(t) = values[i]`` on ``[times[i], times[i+1])``."""

    times: np.ndarray
    values: np.ndarray
    domain: tuple = (0.0, math.inf)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values)
        if t.shape != v.shape or t.ndim != 1 or t.size == 0:
            raise DomainError("need one value per time and at least one point")
        if np.any(np.diff(t) < 0):
            raise DomainError("times must be nondecreasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        idx = np.searchsorted(self.times, t, side="right") - 1
        if np.any(np.asarray(idx) < 0):
            raise DomainError("query before the start of the path")
        return self.values[idx]

    def value_before(self, t):
        """Left limit at ``t``."""
        idx = np.searchsorted(self.times, t, side="left") - 1
        return self.values[np.maximum(idx, 0)]

    @property
    def jump_times(self):
        return self.times[1:]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "value"])
            for t, v in zip(self.times, self.values):
                w.writerow([repr(float(t)), repr(v.item() if hasattr(v, "item") else v)])


def _subtree_events(history, block):
    """Event indices of all merges inside ``block``."""
    out = []
    stack = [block]
    n = history.n
    while stack:
        node = stack.pop()
        if node >= n:
            out.append(node - n)
            stack.extend(history.children(node).tolist())
    return np.array(sorted(out), dtype=np.int64)


def extract_Z(history, epsilon, label=1):
    """``Z_eps(r)``: ancestors at time ``(1-r) eps`` of the block of ``label`` at ``eps``.

    The count of ancestors as a function of ``r`` jumps at ``r = 1 - s/eps``
    for each merge time ``s``; the returned path is its right-continuous
    version (it differs from the raw count only at those jump times).
    """
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    meta = {"epsilon": float(epsilon)}
    if epsilon > history.final_time and not history.absorbed:
        raise DomainError("epsilon lies beyond the simulated horizon")
    block = history.block_at(label, epsilon)
    if history.absorbed and epsilon >= history.final_time:
        meta["absorbed"] = True
    ev = _subtree_events(history, block)
    # later merges (closer to eps) come first in r
    ev = ev[::-1]
    r = 1.0 - history.times[ev] / epsilon
    jumps = history.ks[ev] - 1
    times = np.concatenate(([0.0], r))
    values = np.concatenate(([1], 1 + np.cumsum(jumps)))
    return JumpPath(times, values, (0.0, 1.0), meta)


def evans_space(history, center_label=1, radius=None, resolution=0.0):
    """Closed ball ``B(center, radius)`` of the finite Evans space.

    Leaves are the blocks present at time ``resolution`` (labels themselves
    when it is 0); the distance between two leaves is the time at which they
    merge.  Leaf masses are block sizes over ``n``.
    """
    if radius is None:
        radius = history.final_time
    if radius <= 0:
        raise DomainError("radius must be positive")
    top = history.block_at(center_label, radius)
    center_leaf = history.block_at(center_label, resolution) if resolution > 0 else center_label - 1
    n = history.n
    # internal nodes are the merges above the resolution, in time order
    events = _subtree_events(history, top)
    events = events[history.times[events] > resolution] if events.size else events
    leaves = []
    for e in events:
        for c in history.children(n + e).tolist():
            if history.birth_time(c) <= resolution:
                leaves.append(c)
    if not leaves:
        leaves = [top]
    leaves = sorted(leaves)
    L = len(leaves)
    node_id = {b: i for i, b in enumerate(leaves)}
    for i, e in enumerate(events):
        node_id[n + int(e)] = L + i
    kids = tuple(tuple(node_id[c] for c in history.children(n + int(e)).tolist()) for e in events)
    masses = history.sizes[np.array(leaves)] / n
    return Dendrogram(L, kids, history.times[events], node_id[center_leaf], masses,
                      tuple(int(b) for b in leaves))


def ancestor_count(history, epsilon, s, label=1):
    """Number of blocks at time ``s`` inside the block of ``label`` at ``epsilon``.

    Direct recount through the genealogy (no use of the Z path).
    """
    block = history.block_at(label, epsilon)
    count = 0
    stack = [block]
    while stack:
        node = stack.pop()
        if history.birth_time(node) <= s:
            count += 1
        else:
            stack.extend(history.children(node).tolist())
    return count
