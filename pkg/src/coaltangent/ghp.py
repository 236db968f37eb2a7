"""Gromov-Hausdorff(-Prokhorov) distances between finite ultra-metric spaces.

The compact GH distance is computed as half the minimal distortion of a
correspondence ``R`` between the point sets::

    dis R = max |d_X(x, x') - d_Y(y, y')|   over (x, y), (x', y') in R

which equals the embedding definition for compact spaces (Burago, Burago &
Ivanov, Thm 7.3.25).  The exact search is exponential and capped; larger
inputs go through :func:`gh_bounds`.
"""

import math

import numpy as np
from scipy.optimize import linprog

from .dendrogram import Dendrogram
from .errors import DomainError, NumericError

GH_EXACT_CAP = 16


def _dist(space):
    return space.distance_matrix() if isinstance(space, Dendrogram) else np.asarray(space, float)


def distortion(DX, DY, pairs):
    """Distortion of a relation given as a list of ``(x, y)`` pairs."""
    pairs = np.asarray(pairs, dtype=np.int64)
    xs, ys = pairs[:, 0], pairs[:, 1]
    return float(np.max(np.abs(DX[np.ix_(xs, xs)] - DY[np.ix_(ys, ys)])))


class _Search:
    """Does a correspondence with distortion <= tau exist?

    Vertices are pairs ``(x, y)``; two pairs are compatible when their
    distances differ by at most ``tau``.  A correspondence of distortion
    <= tau is a clique of pairwise compatible vertices covering every ``x``
    and every ``y``.  Branching always happens on the uncovered point with
    the fewest remaining candidate pairs, and the candidate set is kept as a
    bitmask of pairs compatible with everything chosen so far.
    """

    def __init__(self, DX, DY):
        self.nx, self.ny = DX.shape[0], DY.shape[0]
        nx, ny = self.nx, self.ny
        self.gap = np.abs(DX[:, None, :, None] - DY[None, :, None, :]).reshape(nx * ny, nx * ny)
        self.row_mask = [sum(1 << (x * ny + y) for y in range(ny)) for x in range(nx)]
        self.col_mask = [sum(1 << (x * ny + y) for x in range(nx)) for y in range(ny)]

    def feasible(self, tau):
        nv = self.nx * self.ny
        ok = self.gap <= tau
        self.compat = [sum(1 << int(w) for w in np.flatnonzero(ok[v])) for v in range(nv)]
        full = (1 << nv) - 1
        # pairs incompatible with themselves cannot occur (gap 0), so start full
        self.best = None
        return self._extend(full, 0, [])

    def _extend(self, cand, chosen_mask, chosen):
        # pick the uncovered point with fewest candidates
        best_opts, best_count = None, None
        for x in range(self.nx):
            if chosen_mask & self.row_mask[x]:
                continue
            opts = cand & self.row_mask[x]
            c = opts.bit_count()
            if c == 0:
                return False
            if best_count is None or c < best_count:
                best_opts, best_count = opts, c
        for y in range(self.ny):
            if chosen_mask & self.col_mask[y]:
                continue
            opts = cand & self.col_mask[y]
            c = opts.bit_count()
            if c == 0:
                return False
            if best_count is None or c < best_count:
                best_opts, best_count = opts, c
        if best_opts is None:
            self.best = list(chosen)
            return True
        opts = best_opts
        while opts:
            low = opts & -opts
            v = low.bit_length() - 1
            opts ^= low
            chosen.append(v)
            if self._extend(cand & self.compat[v], chosen_mask | low, chosen):
                return True
            chosen.pop()
        return False

    def pairs(self):
        return [(v // self.ny, v % self.ny) for v in self.best]


def optimal_correspondence(X, Y, cap=GH_EXACT_CAP):
    """Minimal-distortion correspondence and its distortion."""
    DX, DY = _dist(X), _dist(Y)
    nx, ny = DX.shape[0], DY.shape[0]
    if nx + ny > cap:
        raise DomainError(
            f"exact GH limited to {cap} points in total (got {nx + ny}); use gh_bounds"
        )
    if nx == 1 or ny == 1:
        pairs = [(x, y) for x in range(nx) for y in range(ny)]
        return pairs, distortion(DX, DY, pairs)
    cand = np.unique(np.abs(DX.reshape(-1, 1) - DY.reshape(1, -1)))
    search = _Search(DX, DY)
    lo_tau = 2.0 * gh_lower_bound(X, Y) if isinstance(X, Dendrogram) else 0.0
    lo = int(np.searchsorted(cand, lo_tau * (1 - 1e-12), side="left"))
    hi = cand.size - 1
    best = None
    while lo < hi:
        mid = (lo + hi) // 2
        if search.feasible(cand[mid]):
            hi = mid
            best = search.pairs()
        else:
            lo = mid + 1
    if best is None or distortion(DX, DY, best) > cand[lo]:
        if not search.feasible(cand[lo]):
            raise NumericError("correspondence search failed at the maximal threshold")
        best = search.pairs()
    return best, distortion(DX, DY, best)


def gh_exact(X, Y, cap=GH_EXACT_CAP):
    """Compact GH distance, exactly, for at most ``cap`` points in total."""
    _, dis = optimal_correspondence(X, Y, cap)
    return dis / 2.0


def _merge_profile(space):
    """Merge heights and the ball counts right after each of them."""
    order = np.argsort(space.heights, kind="stable")
    h = np.asarray(space.heights, dtype=float)[order]
    drops = np.array([len(ch) - 1 for ch in space.children], dtype=np.int64)[order]
    counts = space.n_leaves - np.cumsum(drops)
    return h, counts


def _first_height_at_most(space, count):
    """``inf{s : N(s) <= count}`` where ``N(s)`` counts closed ``s``-balls."""
    if space.n_leaves <= count:
        return 0.0
    h, counts = _merge_profile(space)
    idx = int(np.argmax(counts <= count))
    return float(h[idx])


def _one_sided_lower(X, Y):
    # a correspondence of distortion 2t sends each closed rho-ball of X into a
    # single closed (rho+2t)-ball of Y, hence N_Y(rho + 2t) <= N_X(rho)
    best = 0.0
    rhos = np.concatenate(([0.0], np.asarray(X.heights, dtype=float)))
    for rho in rhos:
        h = _first_height_at_most(Y, X.ball_count(rho))
        best = max(best, (h - rho) / 2.0)
    return best


def gh_lower_bound(X, Y):
    return max(_one_sided_lower(X, Y), _one_sided_lower(Y, X))


def _greedy_pairs(X, Y, a, b, out):
    """Match subtree ``a`` of X with subtree ``b`` of Y top-down."""
    if a < X.n_leaves or b < Y.n_leaves:
        for x in X.leaf_sets[a]:
            for y in Y.leaf_sets[b]:
                out.append((int(x), int(y)))
        return
    kx = sorted(X.children[a - X.n_leaves], key=lambda c: (-X.node_height(c), -len(X.leaf_sets[c])))
    ky = sorted(Y.children[b - Y.n_leaves], key=lambda c: (-Y.node_height(c), -len(Y.leaf_sets[c])))
    m = min(len(kx), len(ky))
    for i in range(m):
        _greedy_pairs(X, Y, kx[i], ky[i], out)
    # leftover children go to the partner child of the closest height
    for c in kx[m:]:
        j = min(range(m), key=lambda i: abs(Y.node_height(ky[i]) - X.node_height(c)))
        _greedy_pairs(X, Y, c, ky[j], out)
    for c in ky[m:]:
        j = min(range(m), key=lambda i: abs(X.node_height(kx[i]) - Y.node_height(c)))
        _greedy_pairs(X, Y, kx[j], c, out)


def candidate_correspondences(X, Y):
    out = []
    pairs = []
    _greedy_pairs(X, Y, X.root, Y.root, pairs)
    out.append(sorted(set(pairs)))
    # the full product has distortion at most max(diam X, diam Y)
    out.append([(x, y) for x in range(X.n_leaves) for y in range(Y.n_leaves)])
    return out


def gh_bounds(X, Y):
    """``(lower, upper)`` bracketing the compact GH distance."""
    lower = gh_lower_bound(X, Y)
    DX, DY = X.distance_matrix(), Y.distance_matrix()
    upper = min(distortion(DX, DY, R) for R in candidate_correspondences(X, Y)) / 2.0
    return float(lower), float(max(lower, upper))


# -- Prokhorov ------------------------------------------------------------------


def _check_same_space(X, Y):
    if X.n_leaves != Y.n_leaves or X.children != Y.children or not np.array_equal(X.heights, Y.heights):
        raise DomainError("prokhorov needs both measures on one common metric space")
    if X.masses is None or Y.masses is None:
        raise DomainError("both spaces need leaf masses")


def prokhorov(X, Y):
    """Prokhorov distance of two measures on one finite ultra-metric space.

    With open neighbourhoods ``A^e = {d(., A) < e}``, the worst sets are
    unions of classes of ``d < e``, so ``sup_A mu(A) - nu(A^e)`` is
    ``sum_C (mu(C) - nu(C))^+`` over those classes.  That quantity is
    constant for ``e`` between consecutive merge heights, which leaves a
    finite minimisation.
    """
    _check_same_space(X, Y)
    diff = X.masses - Y.masses
    levels = np.concatenate(([0.0], X.heights))
    best = math.inf
    for i, h in enumerate(levels):
        roots = X.cluster_roots(h)
        cls = np.array([diff[X.leaf_sets[r]].sum() for r in roots])
        gap = max(cls.clip(min=0).sum(), (-cls).clip(min=0).sum())
        nxt = levels[i + 1] if i + 1 < levels.size else math.inf
        cand = max(h, gap)
        if cand <= nxt:
            best = min(best, cand)
    return float(best)


def prokhorov_bruteforce(X, Y):
    """Enumerate every subset; for validation on at most ~12 leaves."""
    _check_same_space(X, Y)
    D = X.distance_matrix()
    L = X.n_leaves
    cands = np.unique(np.concatenate(([0.0], D.ravel())))
    subsets = [np.array([(s >> i) & 1 for i in range(L)], bool) for s in range(1, 1 << L)]

    def ok(eps_open_cut, eps):
        # neighbourhood uses d < eps, i.e. d <= eps_open_cut for the cut level
        for A in subsets:
            nb = (D[A] <= eps_open_cut).any(axis=0)
            if X.masses[A].sum() > Y.masses[nb].sum() + eps + 1e-15:
                return False
            if Y.masses[A].sum() > X.masses[nb].sum() + eps + 1e-15:
                return False
        return True

    best = math.inf
    for i, h in enumerate(cands):
        nxt = cands[i + 1] if i + 1 < cands.size else math.inf
        # on (h, nxt] the neighbourhood is d <= h; find smallest admissible eps
        lo = h
        if ok(h, max(lo, 0.0)):
            best = min(best, lo)
            continue
        # requirement is eps >= gap; find gap by bisection
        a, b = h, max(X.total_mass(), Y.total_mass()) + h + 1
        for _ in range(200):
            m = 0.5 * (a + b)
            if ok(h, m):
                b = m
            else:
                a = m
        if b <= nxt:
            best = min(best, b)
    return float(best)


def prokhorov_general(D, mu, nu, D_cross=None):
    """Prokhorov distance between ``mu`` and ``nu`` in a finite metric space.

    ``D`` is the full distance matrix when both measures live on the same
    points; alternatively pass ``D_cross[i, j]`` between the support of
    ``mu`` (rows) and of ``nu`` (columns).  Uses the max-flow form
    ``sup_A mu(A) - nu(A^e) = mu(X) - maxflow`` over edges with ``d < e``.
    """
    mu = np.asarray(mu, float)
    nu = np.asarray(nu, float)
    C = np.asarray(D if D_cross is None else D_cross, float)
    levels = np.unique(np.concatenate(([0.0], C.ravel())))

    def flow(level):
        adm = np.argwhere(C <= level)
        if adm.size == 0:
            return 0.0
        m, n = C.shape
        ne = adm.shape[0]
        A = np.zeros((m + n, ne))
        A[adm[:, 0], np.arange(ne)] = 1.0
        A[m + adm[:, 1], np.arange(ne)] = 1.0
        res = linprog(-np.ones(ne), A_ub=A, b_ub=np.concatenate((mu, nu)),
                      bounds=(0, None), method="highs")
        if res.status != 0:
            raise NumericError(f"transport LP failed: {res.message}")
        return -res.fun

    best = math.inf
    tmu, tnu = mu.sum(), nu.sum()
    for i, h in enumerate(levels):
        if h >= best:
            break
        f = flow(h)
        gap = max(tmu - f, tnu - f, 0.0)
        nxt = levels[i + 1] if i + 1 < levels.size else math.inf
        cand = max(h, gap)
        if cand <= nxt:
            best = min(best, cand)
    return float(best)


def ghp_upper(X, Y, correspondences=None):
    """Upper bound on compact GHP from correspondence-coupled embeddings.

    A correspondence of distortion ``dis`` defines a metric on the disjoint
    union, ``d(x, y) = min_R d_X(x, x') + dis/2 + d_Y(y', y)``, in which the
    Hausdorff distance is at most ``dis/2``; the Prokhorov distance there is
    computed exactly.
    """
    if X.masses is None or Y.masses is None:
        raise DomainError("GHP needs leaf masses on both spaces")
    DX, DY = X.distance_matrix(), Y.distance_matrix()
    if correspondences is None:
        correspondences = candidate_correspondences(X, Y)
        if X.n_leaves + Y.n_leaves <= GH_EXACT_CAP:
            correspondences.append(optimal_correspondence(X, Y)[0])
    best = math.inf
    for R in correspondences:
        dis = distortion(DX, DY, R)
        R = np.asarray(R)
        cross = np.min(DX[:, R[:, 0]][:, :, None] + DY[R[:, 1], :][None, :, :], axis=1) + dis / 2.0
        best = min(best, dis / 2.0 + prokhorov_general(None, X.masses, Y.masses, D_cross=cross))
    return float(best)


# -- pointed sums ----------------------------------------------------------------


def _pointed_sum(X, Y, term):
    """``sum_n 2^-n (1 ^ term(B(p_X, n), B(p_Y, n)))``, exact for bounded spaces."""
    rx, ry = X.radius_about_point(), Y.radius_about_point()
    total = 0.0
    n = 1
    while True:
        bx, by = X.ball(X.point, n), Y.ball(Y.point, n)
        t = min(1.0, term(bx, by))
        if n >= rx and n >= ry:
            # balls are saturated: the remaining tail sums to 2^-n * t
            return total + 2.0 ** (1 - n) * t
        total += 2.0 ** (-n) * t
        n += 1


def _gh_term(bx, by):
    if bx.n_leaves + by.n_leaves <= GH_EXACT_CAP:
        return gh_exact(bx, by)
    return gh_bounds(bx, by)[1]


def pointed_gh(X, Y):
    """Pointed GH distance; exact per ball when small, otherwise an upper bound."""
    return _pointed_sum(X, Y, _gh_term)


def pointed_ghp(X, Y):
    """Upper bound on the pointed GHP distance (exact Prokhorov per coupling)."""
    return _pointed_sum(X, Y, ghp_upper)
