"""Brownian paths on a grid: excursions, local times and their Evans spaces.

Paths are sampled at spacing ``dt``.  Long stretches far above the levels of
interest are cut out: when a path exceeds its ``ceiling`` it is put back at
the ceiling.  By the strong Markov property this only deletes excursions
above the ceiling, which carry no local time at lower levels and do not
change any running minimum, so every quantity computed here has the same
law as on the uncut path.  The grid keeps its spacing, so occupation-time
local time estimates stay valid below the ceiling.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .coalescent import JumpPath
from .dendrogram import Dendrogram
from .errors import DomainError, NumericError

DEFAULT_MAX_STEPS = 400_000_000


@dataclass(frozen=True, eq=False)
class PathGrid:
    """Values at ``(k - origin_index) * dt`` (ceiling cuts aside)."""

    dt: float
    values: np.ndarray
    origin_index: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise DomainError("path values must be finite")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def duration(self):
        return (self.values.size - 1) * self.dt

    def shifted(self, c):
        return PathGrid(self.dt, self.values + c, self.origin_index, dict(self.metadata))

    def to_csv(self, path):
        """Write ``(index, value)`` rows plus a JSON sidecar with the grid data."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "value"])
            for k, v in enumerate(self.values):
                w.writerow([k, repr(float(v))])
        side = {"dt": self.dt, "origin_index": self.origin_index}
        side.update({k: v for k, v in self.metadata.items() if isinstance(v, (int, float, str, bool))})
        with open(str(path) + ".json", "w") as fh:
            json.dump(side, fh, indent=2, sort_keys=True)

    @classmethod
    def from_csv(cls, path):
        with open(str(path) + ".json") as fh:
            side = json.load(fh)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        vals = np.array([float(r[1]) for r in rows])
        meta = {k: v for k, v in side.items() if k not in ("dt", "origin_index")}
        return cls(side["dt"], vals, side["origin_index"], meta)


@dataclass(frozen=True)
class LocalTimeProfile:
    levels: np.ndarray
    local_time: np.ndarray
    window: float

    def at(self, x):
        return np.interp(x, self.levels, self.local_time)


def local_time_window(dt, c=2.0):
    return c * math.sqrt(dt)


# -- kernels --------------------------------------------------------------------


@numba.njit(cache=True)
def _fill_bm(buf, start, x, dt, lo, ceiling, g):
    """Continue a cut BM into ``buf[start:]``; return the end index or -1 if full."""
    sd = math.sqrt(dt)
    for n in range(start, buf.size):
        x += sd * g.standard_normal()
        if x > ceiling:
            x = ceiling
        if x <= lo:
            buf[n] = lo
            return n + 1
        buf[n] = x
    return -1


@numba.njit(cache=True)
def _fill_bes3(buf, start, state, dt, level, g):
    sd = math.sqrt(dt)
    for n in range(start, buf.size):
        for i in range(3):
            state[i] += sd * g.standard_normal()
        r = math.sqrt(state[0] ** 2 + state[1] ** 2 + state[2] ** 2)
        if r >= level:
            buf[n] = level
            return n + 1
        buf[n] = r
    return -1


def _drive(step, x0, max_steps):
    buf = np.empty(1 << 18)
    buf[0] = x0
    start = 1
    while True:
        end = step(buf, start)
        if end > 0:
            return buf[:end].copy(), True
        if buf.size >= max_steps:
            return buf, False
        start = buf.size
        bigger = np.empty(2 * buf.size)
        bigger[:start] = buf
        buf = bigger


def _bm_until_below(x0, dt, lo, ceiling, max_steps, g):
    """BM from ``x0`` until it is <= ``lo``; values above ``ceiling`` are cut.

    The last value is clipped to ``lo``.  Returns ``(values, ok)``.
    """
    return _drive(lambda buf, k: _fill_bm(buf, k, buf[k - 1], dt, lo, ceiling, g), x0, max_steps)


def _bes3_until_above(dt, level, max_steps, g):
    """Norm of a 3-d BM from 0 until it reaches ``level`` (last value clipped)."""
    state = np.zeros(3)
    return _drive(lambda buf, k: _fill_bes3(buf, k, state, dt, level, g), 0.0, max_steps)


@numba.njit(cache=True)
def _bm_fixed(n, dt, g):
    out = np.empty(n + 1)
    out[0] = 0.0
    sd = math.sqrt(dt)
    for k in range(n):
        out[k + 1] = out[k] + sd * g.standard_normal()
    return out


@numba.njit(cache=True)
def _window_count(values, lo, hi):
    c = 0
    for v in values:
        if lo < v < hi:
            c += 1
    return c


# -- paths ------------------------------------------------------------------------


def simulate_two_sided_bm(T, dt, rng):
    """Two-sided BM on ``[-T, T]`` with ``W(0) = 0`` at ``origin_index``."""
    if not (T > 0 and dt > 0):
        raise DomainError("T and dt must be positive")
    n = int(round(T / dt))
    right = _bm_fixed(n, dt, rng)
    left = _bm_fixed(n, dt, rng)
    return PathGrid(dt, np.concatenate((left[:0:-1], right)), n, {"T": float(T)})


def _first_crossings(values, origin, level):
    below = np.flatnonzero(values[origin:] <= level)
    right = origin + int(below[0]) if below.size else None
    below = np.flatnonzero(values[: origin + 1] <= level)
    left = int(below[-1]) if below.size else None
    return left, right


def straddling_excursion(path, level=-1.0, rng=None, max_steps=DEFAULT_MAX_STEPS):
    """Excursion of ``path`` above ``level`` containing the origin, shifted up.

    Returns ``Y = W - level`` on ``[tau_-, tau_+]`` with both endpoints set to
    0 and ``origin_index`` pointing at the original time 0.  If a side never
    reaches ``level`` and ``rng`` is given, that side is extended with fresh
    Brownian increments (no ceiling) until it does.
    """
    v = path.values
    o = path.origin_index
    if v[o] <= level:
        raise DomainError("the path is not above the level at the origin")
    left, right = _first_crossings(v, o, level)
    if right is None or left is None:
        if rng is None:
            raise NumericError("path does not cross the level on both sides; extend T")
        parts = [v[: o + 1][::-1], v[o:]]
        for side, idx in ((0, left), (1, right)):
            if idx is not None:
                continue
            start = parts[side][-1]
            ext, ok = _bm_until_below(start, path.dt, level, np.inf, max_steps, rng)
            if not ok:
                raise NumericError("no crossing within the maximal extension")
            parts[side] = np.concatenate((parts[side], ext[1:]))
        v = np.concatenate((parts[0][::-1], parts[1][1:]))
        o = parts[0].size - 1
        left, right = _first_crossings(v, o, level)
    y = v[left : right + 1] - level
    y[0] = 0.0
    y[-1] = 0.0
    return PathGrid(path.dt, y, o - left, dict(path.metadata))


def sample_W_ball(dt, rng, ceiling=None, max_steps=DEFAULT_MAX_STEPS):
    """Two-sided BM from 0 run on each side until it first hits -1.

    Values above ``ceiling`` (default ``max(0.05, 20 sqrt(dt))``) are cut;
    both constructions of the unit ball only look at ``W`` below 0 plus a
    local-time window around 0.
    """
    if ceiling is None:
        ceiling = max(0.05, 20.0 * math.sqrt(dt))
    sides = []
    for _ in range(2):
        vals, ok = _bm_until_below(0.0, dt, -1.0, ceiling, max_steps, rng)
        if not ok:
            raise NumericError("Brownian side did not reach -1 within max_steps")
        sides.append(vals)
    left, right = sides
    w = np.concatenate((left[:0:-1], right))
    return PathGrid(dt, w, left.size - 1, {"ceiling": float(ceiling)})


def sample_straddling_excursion(dt, rng, ceiling=None):
    """``Y = W + 1`` on the excursion of ``W`` above -1 straddling 0."""
    return straddling_excursion(sample_W_ball(dt, rng, ceiling), -1.0)


def conditioned_excursion(rng, dt, ceiling=None, max_steps=DEFAULT_MAX_STEPS):
    """Brownian excursion conditioned to reach level 1.

    Williams' decomposition: a 3-dimensional Bessel process from 0 until it
    hits 1, followed by a Brownian motion from 1 killed at 0.
    """
    if ceiling is None:
        ceiling = 1.0 + max(0.05, 20.0 * math.sqrt(dt))
    up, ok = _bes3_until_above(dt, 1.0, max_steps, rng)
    if not ok:
        raise NumericError("Bessel segment did not reach 1 within max_steps")
    down, ok = _bm_until_below(1.0, dt, 0.0, ceiling, max_steps, rng)
    if not ok:
        raise NumericError("Brownian segment did not return to 0 within max_steps")
    vals = np.concatenate((up, down[1:]))
    return PathGrid(dt, vals, 0, {"ceiling": float(ceiling), "hit_index": int(up.size - 1)})


def rejection_excursion(rng, dt, h, max_tries=1_000_000):
    """Slow oracle: BM from ``h`` killed at 0, kept only if it reaches 1.

    As ``h -> 0`` the accepted paths converge to the conditioned excursion;
    acceptance probability is ``h``.
    """
    for _ in range(max_tries):
        vals, ok = _bm_until_below(h, dt, 0.0, np.inf, DEFAULT_MAX_STEPS, rng)
        if ok and vals.max() >= 1.0:
            return PathGrid(dt, np.concatenate(([0.0], vals)), 0, {"h": h})
    raise NumericError("no accepted path")


def refine_path(path, rng, factor=2):
    """Divide ``dt`` by ``factor`` by filling each step with a Brownian bridge.

    Only meaningful on stretches without ceiling cuts; cuts sit above the
    levels that matter, so the bridge there is harmless.
    """
    factor = int(factor)
    if factor < 1:
        raise DomainError("factor must be a positive integer")
    v = path.values
    m = v.size - 1
    sub = path.dt / factor
    frac = np.arange(1, factor + 1) / factor
    out = np.empty(m * factor + 1)
    out[0] = v[0]
    chunk = 1 << 20
    for a in range(0, m, chunk):
        b = min(m, a + chunk)
        walk = np.cumsum(math.sqrt(sub) * rng.standard_normal((b - a, factor)), axis=1)
        bridge = v[a:b, None] + walk - frac * (walk[:, -1:] - np.diff(v[a : b + 1])[:, None])
        # keep the coarse points bit-exact (clipped endpoints must stay at the level)
        bridge[:, -1] = v[a + 1 : b + 1]
        out[1 + a * factor : 1 + b * factor] = bridge.ravel()
    return PathGrid(sub, out, factor * path.origin_index, dict(path.metadata))


def hitting_time(path, level=1.0):
    idx = np.flatnonzero(path.values >= level)
    if idx.size == 0:
        raise DomainError("the path never reaches the level")
    return idx[0] * path.dt


# -- local time --------------------------------------------------------------------


def local_time_profile(path, levels, c=2.0):
    """Occupation estimator ``(dt / 2e) #{k : |v_k - x| < e}`` with ``e = c sqrt(dt)``."""
    eps = local_time_window(path.dt, c)
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    srt = np.sort(path.values)
    lo = np.searchsorted(srt, levels - eps, side="right")
    hi = np.searchsorted(srt, levels + eps, side="left")
    return LocalTimeProfile(levels, (hi - lo) * path.dt / (2.0 * eps), eps)


def local_time_at(values, dt, level, c=2.0):
    eps = local_time_window(dt, c)
    return _window_count(values, level - eps, level + eps) * dt / (2.0 * eps)


def time_change_V(profile, t):
    """``V(t) = int_{1-t}^1 4 / Z_v dv`` by the trapezoid rule on the profile grid."""
    if not 0.0 <= t <= 1.0:
        raise DomainError("t must lie in [0, 1]")
    if t == 0.0:
        return 0.0
    lv = profile.levels
    inner = lv[(lv > 1.0 - t) & (lv < 1.0)]
    x = np.concatenate(([1.0 - t], inner, [1.0]))
    z = profile.at(x)
    if np.any(z <= 0):
        raise DomainError("zero local time inside the integration range")
    return float(np.trapezoid(4.0 / z, x))


def t_epsilon(profile, epsilon):
    """``T_eps = 4 / (eps Z_{1-sqrt(eps)})`` or ``1/sqrt(eps)``, whichever is larger."""
    if not 0.0 < epsilon < 1.0:
        raise DomainError("epsilon must lie in (0, 1)")
    z = float(profile.at(1.0 - math.sqrt(epsilon)))
    if z <= 0:
        raise DomainError("zero local time at level 1 - sqrt(eps)")
    return max(4.0 / (epsilon * z), 1.0 / math.sqrt(epsilon))


# -- Evans spaces -------------------------------------------------------------------


def dendrogram_from_gaps(gaps, masses=None, point=0):
    """Ultra-metric space on a line of leaves from consecutive gap heights.

    ``gaps[i]`` is the distance between leaves ``i`` and ``i+1``; any other
    distance is the largest gap in between.  Equal gaps merge in one node.
    """
    gaps = np.asarray(gaps, dtype=float)
    L = gaps.size + 1
    if L == 1:
        return Dendrogram(1, (), np.zeros(0), 0, masses)
    order = np.argsort(gaps, kind="stable")
    # union-find over contiguous segments; each segment knows its current node
    seg_left = np.arange(L)
    seg_right = np.arange(L)
    node = np.arange(L)
    owner = np.arange(L)  # leaf -> segment representative

    def find(x):
        while owner[x] != x:
            owner[x] = owner[owner[x]]
            x = owner[x]
        return x

    children, heights = [], []
    i = 0
    while i < order.size:
        h = gaps[order[i]]
        j = i
        while j < order.size and gaps[order[j]] == h:
            j += 1
        # gaps with equal height: group the touching segments
        groups = []
        for g in sorted(order[i:j]):
            a = find(g)
            b = find(g + 1)
            if groups and groups[-1][-1] == a:
                groups[-1].append(b)
            else:
                groups.append([a, b])
        for grp in groups:
            kids = tuple(int(node[s]) for s in grp)
            children.append(kids)
            heights.append(float(h))
            top = grp[0]
            for s in grp[1:]:
                owner[s] = top
            seg_right[top] = seg_right[grp[-1]]
            node[top] = L + len(children) - 1
        i = j
    return Dendrogram(L, tuple(children), np.array(heights), point, masses)


@dataclass(frozen=True)
class ExcursionLeaves:
    """Clusters of an excursion above ``1 - resolution`` that reach 1."""

    starts: np.ndarray
    ends: np.ndarray
    masses: np.ndarray
    gaps: np.ndarray
    resolution: float


def excursion_leaves(f, resolution=None, c=2.0):
    v = f.values
    if v.max() < 1.0:
        raise DomainError("the excursion never reaches level 1")
    if resolution is None:
        resolution = 2.0 * local_time_window(f.dt, c)
    if resolution < local_time_window(f.dt, c):
        raise DomainError("resolution must be at least the local-time window")
    above = v > 1.0 - resolution
    edges = np.diff(above.astype(np.int8))
    starts = np.flatnonzero(edges == 1) + 1
    ends = np.flatnonzero(edges == -1) + 1
    if above[0]:
        starts = np.concatenate(([0], starts))
    if above[-1]:
        ends = np.concatenate((ends, [v.size]))
    runmax = np.maximum.reduceat(v, starts) if starts.size else np.zeros(0)
    # "reaches 1" up to grid tolerance: the run enters the local-time window
    eps = local_time_window(f.dt, c)
    keep = runmax > 1.0 - eps
    starts, ends = starts[keep], ends[keep]
    near = (np.abs(v - 1.0) < eps).astype(np.int64)
    csum = np.concatenate(([0], np.cumsum(near)))
    masses = (csum[ends] - csum[starts]) * f.dt / (2.0 * eps)
    gaps = np.array([1.0 - v[ends[i] : starts[i + 1]].min() for i in range(starts.size - 1)])
    return ExcursionLeaves(starts, ends, masses, gaps, float(resolution))


def truncate_by_mass(space, max_points):
    """Keep the heaviest leaves (and the point); dropped mass moves to the nearest kept leaf."""
    if max_points is None or space.n_leaves <= max_points:
        return space
    order = np.argsort(-space.masses, kind="stable")
    keep = [space.point] + [int(i) for i in order if i != space.point][: max_points - 1]
    keep = np.array(sorted(keep))
    D = space.distance_matrix()
    masses = space.masses.copy()
    new_mass = masses[keep].copy()
    pos = {int(k): i for i, k in enumerate(keep)}
    for leaf in range(space.n_leaves):
        if leaf in pos:
            continue
        d = D[leaf, keep]
        near = np.flatnonzero(d == d.min())
        target = near[np.argmax(masses[keep][near])]
        new_mass[target] += masses[leaf]
    sub = space.restrict(keep, space.point)
    return sub.with_masses(new_mass)


def evans_space_from_excursion(f, max_points=None, rng=None, resolution=None, point=None):
    """Evans ultra-metric measure space of an excursion reaching level 1.

    Leaves are the closed balls of radius ``resolution`` (default
    ``4 sqrt(dt)``): excursions of ``f`` above ``1 - resolution`` that reach
    1.  Distances are ``1 - min f`` between leaves; the mass of a leaf is its
    local time at level 1.  The distinguished point is the leaf containing
    ``f.origin_index`` when that is positive, otherwise a leaf drawn with
    probability proportional to its mass (the first leaf of the
    local-time-ordered enumeration).
    """
    lv = excursion_leaves(f, resolution)
    if point is None:
        if f.origin_index > 0:
            point = int(np.searchsorted(lv.starts, f.origin_index, side="right") - 1)
            if point < 0 or f.origin_index >= lv.ends[point]:
                raise DomainError("the origin does not lie in a leaf above 1 - resolution")
        else:
            if rng is None:
                raise DomainError("rng is needed to draw the distinguished leaf")
            p = lv.masses / lv.masses.sum() if lv.masses.sum() > 0 else None
            point = int(rng.choice(lv.masses.size, p=p))
    space = dendrogram_from_gaps(lv.gaps, lv.masses, point)
    return truncate_by_mass(space, max_points)


def zero_set_space(W, max_points=None, resolution=None, c=2.0):
    """Unit ball of the zero-set construction applied to ``-W``.

    Zeros of ``W`` in the stretch where ``W > -1`` around the origin, with
    ``d(x, y) = sup(-W) on [x, y]``; zeros closer than ``resolution`` are
    identified.  Masses are local times of ``W`` at 0.  Using ``-W`` makes
    the result comparable path by path with the excursion construction.
    """
    v = W.values
    o = W.origin_index
    if resolution is None:
        resolution = 2.0 * local_time_window(W.dt, c)
    left, right = _first_crossings(v, o, -1.0)
    if left is None or right is None:
        raise DomainError("W must reach -1 on both sides of the origin")
    seg = v[left : right + 1]
    oo = o - left
    eps = local_time_window(W.dt, c)
    # grid version of the zero set: the stretches where W > -eps; W >= 0 parts
    # sit inside excursions of -W below 0 and so in the class of their zeros
    cand = np.flatnonzero(seg > -eps)
    dips = -np.minimum.reduceat(seg, cand[:-1]) if cand.size > 1 else np.zeros(0)
    # a new class starts wherever -W rises above the resolution between candidates
    cut = dips >= resolution
    first = np.concatenate(([0], np.flatnonzero(cut) + 1))
    last = np.concatenate((first[1:] - 1, [cand.size - 1]))
    near = (np.abs(seg) < eps).astype(np.int64)
    csum = np.concatenate(([0], np.cumsum(near)))
    lo, hi = cand[first], cand[last]
    masses = (csum[hi + 1] - csum[lo]) * W.dt / (2.0 * eps)
    gaps = dips[cut]
    point = int(np.searchsorted(lo, oo, side="right") - 1)
    space = dendrogram_from_gaps(gaps, masses, point)
    return truncate_by_mass(space, max_points)


def limit_space_from_W(W, max_points=None, route="excursion", resolution=None):
    """Unit ball ``B(o, 1)`` of the limit space built from a two-sided BM sample."""
    if route == "excursion":
        return evans_space_from_excursion(straddling_excursion(W, -1.0), max_points,
                                          resolution=resolution)
    if route == "zeros":
        return zero_set_space(W, max_points, resolution)
    raise DomainError(f"unknown route {route!r}")


def ball_counts(space, rs):
    """Number of closed ``(1 - r)``-balls for each ``r``."""
    return np.array([space.ball_count(1.0 - r) for r in rs])


def ball_count_path(space, eta=0.0):
    """``r -> #`` closed ``(1-r)``-balls as a right-continuous jump path on ``[0, 1-eta]``.

    A merge at height ``h`` splits the balls for radii below ``h``, so the
    jump sits at ``r = 1 - h``.
    """
    h = np.asarray(space.heights)
    split = np.array([len(c) - 1 for c in space.children], dtype=np.int64)
    sel = (h > eta) & (h < 1.0)
    hs, ks = h[sel], split[sel]
    order = np.argsort(-hs, kind="stable")
    hs, ks = hs[order], ks[order]
    uniq, first = np.unique(-hs, return_index=True)
    sizes = np.add.reduceat(ks, first) if ks.size else ks
    base = 1 + int(split[h >= 1.0].sum())
    times = np.concatenate(([0.0], 1.0 + uniq))
    values = base + np.concatenate(([0], np.cumsum(sizes)))
    return JumpPath(times, values, (0.0, 1.0 - eta), {"eta": float(eta)})


# -- rescaled family -------------------------------------------------------------------


def scaled_excursion_family(X, epsilon, profile, rng):
    """Excursions of ``X_eps = 1 + (X - 1) T_eps`` above 0 that reach 1, and a pick.

    ``Y_eps`` is chosen with probability proportional to each excursion's
    local time at level 1.  Returns ``(excursions, Y_eps, T_eps)``.
    """
    T = t_epsilon(profile, epsilon)
    dt = X.dt * T * T
    xe = 1.0 + (X.values - 1.0) * T
    pos = xe > 0
    edges = np.diff(pos.astype(np.int8))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) + 1
    if pos[0]:
        starts = np.concatenate(([0], starts))
    if pos[-1]:
        ends = np.concatenate((ends, [xe.size - 1]))
    exc = []
    for a, b in zip(starts, ends):
        seg = xe[a : b + 1].copy()
        if seg.max() < 1.0:
            continue
        seg[0] = max(seg[0], 0.0) if a == 0 else 0.0
        seg[-1] = 0.0
        seg[0] = 0.0
        # grid resolution relative to the band [1 - 1/T, 1] the family lives in
        exc.append(PathGrid(dt, seg, 0, {"T_eps": T, "window_over_band": 2.0 * math.sqrt(X.dt) * T}))
    if not exc:
        raise NumericError("no excursion of X_eps reaches 1")
    ell = np.array([local_time_at(e.values, dt, 1.0) for e in exc])
    pick = int(rng.choice(len(exc), p=ell / ell.sum())) if ell.sum() > 0 else 0
    return exc, exc[pick], T


# -- excursion-theory law ----------------------------------------------------------------


def below_excursion_rate(eta):
    """Ito intensity, per unit local time, of excursions below a level reaching depth ``eta``."""
    return 1.0 / (2.0 * eta)


def excursion_hausdorff_law(ell_gap, eta, reps, rng):
    """Frequency of "no excursion below level 1 deeper than ``eta``" in a local-time window.

    Excursions below the level form a Poisson process in local time; those
    deeper than ``eta`` arrive at rate ``1/(2 eta)`` under the occupation
    density normalisation (the same that gives ``ell_1 ~ Exp(1/2)``).
    """
    if ell_gap < 0 or eta <= 0:
        raise DomainError("need ell_gap >= 0 and eta > 0")
    if ell_gap == 0 or math.isinf(eta):
        return 1.0
    counts = rng.poisson(ell_gap * below_excursion_rate(eta), size=reps)
    return float(np.mean(counts == 0))


@numba.njit(cache=True)
def _local_time_until_deep(dt, eps, ell_gap, eta, ceiling, max_steps, g):
    sd = math.sqrt(dt)
    x = 0.0
    ell = 0.0
    unit = dt / (2.0 * eps)
    for _ in range(max_steps):
        if -eps < x < eps:
            ell += unit
            if ell >= ell_gap:
                return 1
        x += sd * g.standard_normal()
        if x > ceiling:
            x = ceiling
        if x <= -eta:
            return 0
    return -1


def excursion_hausdorff_path_check(ell_gap, eta, reps, dt, rng):
    """Path-level version: BM at the level accumulates ``ell_gap`` local time
    before dipping ``eta`` below it, with probability ``exp(-ell_gap/(2 eta))``."""
    eps = local_time_window(dt)
    ok = 0
    for _ in range(reps):
        r = _local_time_until_deep(dt, eps, ell_gap, eta, max(0.05, 20 * math.sqrt(dt)),
                                   DEFAULT_MAX_STEPS, rng)
        if r < 0:
            raise NumericError("path check exceeded max_steps")
        ok += r
    return ok / reps
