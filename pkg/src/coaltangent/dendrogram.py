"""Finite pointed ultra-metric (measure) spaces stored as merge trees.

Leaves are ``0..L-1``.  Internal node ``L+i`` is the ``i``-th entry of
``children``/``heights``; children always precede their parent, so the root
is the last node.  The distance between two leaves is the height of their
lowest common ancestor.  Every finite ultra-metric space has exactly one such
tree once internal nodes with equal heights are fused, which is how
:meth:`Dendrogram.from_distance_matrix` builds it.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError


@dataclass(frozen=True, eq=False)
class Dendrogram:
    n_leaves: int
    children: tuple
    heights: np.ndarray
    point: int = 0
    masses: np.ndarray | None = None
    labels: tuple | None = None

    def __post_init__(self):
        h = np.asarray(self.heights, dtype=float)
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "children", tuple(tuple(int(c) for c in ch) for ch in self.children))
        if self.masses is not None:
            m = np.asarray(self.masses, dtype=float)
            if m.shape != (self.n_leaves,) or not np.all(np.isfinite(m)):
                raise DomainError("masses must be finite, one per leaf")
            object.__setattr__(self, "masses", m)
        self._validate()

    def _validate(self):
        L = self.n_leaves
        if L < 1:
            raise DomainError("a dendrogram needs at least one leaf")
        if len(self.children) != self.heights.size:
            raise DomainError("one height per internal node")
        if L == 1 and self.children:
            raise DomainError("a single leaf has no merges")
        if L > 1 and not self.children:
            raise DomainError("several leaves need at least one merge")
        if not 0 <= self.point < L:
            raise DomainError(f"point {self.point} is not a leaf")
        node_h = np.concatenate((np.zeros(L), self.heights))
        seen = np.zeros(L + len(self.children), dtype=bool)
        for i, ch in enumerate(self.children):
            me = L + i
            if len(ch) < 2:
                raise DomainError("internal nodes need at least two children")
            for c in ch:
                if not 0 <= c < me:
                    raise DomainError("children must precede their parent")
                if seen[c]:
                    raise DomainError(f"node {c} has two parents")
                seen[c] = True
                if not node_h[c] < node_h[me]:
                    raise DomainError("heights must strictly increase towards the root")
        if L > 1 and np.count_nonzero(~seen) != 1:
            raise DomainError("merge tree must be connected with a single root")

    # -- structure -----------------------------------------------------------

    @property
    def n_nodes(self):
        return self.n_leaves + len(self.children)

    @property
    def root(self):
        return self.n_nodes - 1

    @property
    def diameter(self):
        return float(self.heights[-1]) if self.children else 0.0

    def node_height(self, node):
        return 0.0 if node < self.n_leaves else float(self.heights[node - self.n_leaves])

    @cached_property
    def parent(self):
        par = np.full(self.n_nodes, -1, dtype=np.int64)
        for i, ch in enumerate(self.children):
            par[list(ch)] = self.n_leaves + i
        return par

    @cached_property
    def leaf_sets(self):
        """Sorted leaf arrays under every node."""
        sets = [np.array([i]) for i in range(self.n_leaves)]
        for ch in self.children:
            sets.append(np.sort(np.concatenate([sets[c] for c in ch])))
        return sets

    def total_mass(self):
        return float(self.masses.sum()) if self.masses is not None else float(self.n_leaves)

    def distance_matrix(self):
        L = self.n_leaves
        D = np.zeros((L, L))
        sets = self.leaf_sets
        for i, ch in enumerate(self.children):
            h = self.heights[i]
            for a in range(len(ch)):
                for b in range(a + 1, len(ch)):
                    sa, sb = sets[ch[a]], sets[ch[b]]
                    D[np.ix_(sa, sb)] = h
                    D[np.ix_(sb, sa)] = h
        return D

    def distance(self, i, j):
        if i == j:
            return 0.0
        par = self.parent
        anc = set()
        a = i
        while a >= 0:
            anc.add(a)
            a = par[a]
        b = j
        while b not in anc:
            b = par[b]
        return self.node_height(b)

    def ancestor_at(self, leaf, radius):
        """Highest ancestor of ``leaf`` with height at most ``radius``."""
        node = leaf
        par = self.parent
        while par[node] >= 0 and self.node_height(par[node]) <= radius:
            node = par[node]
        return int(node)

    # -- constructors ----------------------------------------------------------

    @classmethod
    def singleton(cls, mass=None, label=None):
        return cls(1, (), np.zeros(0), 0,
                   None if mass is None else np.array([mass], dtype=float),
                   None if label is None else (label,))

    @classmethod
    def from_distance_matrix(cls, D, point=0, masses=None, labels=None, atol=0.0):
        """Merge tree of an ultra-metric distance matrix (single linkage).

        Pairs whose distances differ by at most ``atol`` are merged at one
        height, so near-ties do not create spurious levels.
        """
        D = np.asarray(D, dtype=float)
        L = D.shape[0]
        if D.shape != (L, L):
            raise DomainError("distance matrix must be square")
        if L == 1:
            return cls(1, (), np.zeros(0), 0, masses, labels)
        iu, ju = np.triu_indices(L, 1)
        d = D[iu, ju]
        if np.any(d <= 0):
            raise DomainError("distinct points must be at positive distance")
        order = np.argsort(d, kind="stable")
        uf = np.arange(L)

        def find(x):
            while uf[x] != x:
                uf[x] = uf[uf[x]]
                x = uf[x]
            return x

        node_of = {i: i for i in range(L)}
        children, heights = [], []
        pos = 0
        while pos < order.size:
            h = d[order[pos]]
            groups = {}
            end = pos
            while end < order.size and d[order[end]] <= h + atol:
                end += 1
            # union within the level, remembering which old clusters join
            level_roots = set()
            for e in order[pos:end]:
                ra, rb = find(iu[e]), find(ju[e])
                level_roots.update((ra, rb))
            for e in order[pos:end]:
                ra, rb = find(iu[e]), find(ju[e])
                if ra != rb:
                    uf[rb] = ra
            for r in level_roots:
                groups.setdefault(find(r), set()).add(r)
            for top, members in groups.items():
                if len(members) < 2:
                    continue
                kids = tuple(sorted(node_of[m] for m in members))
                children.append(kids)
                heights.append(float(d[order[end - 1]]) if atol else float(h))
                node_of[top] = L + len(children) - 1
            pos = end
        return cls(L, tuple(children), np.array(heights), point, masses, labels)

    # -- operations ------------------------------------------------------------

    def rescale(self, c):
        if not c > 0:
            raise DomainError("scale must be positive")
        return Dendrogram(self.n_leaves, self.children, self.heights * c, self.point,
                          self.masses, self.labels)

    def with_masses(self, masses):
        return Dendrogram(self.n_leaves, self.children, self.heights, self.point,
                          masses, self.labels)

    def with_point(self, point):
        return Dendrogram(self.n_leaves, self.children, self.heights, point,
                          self.masses, self.labels)

    def subtree(self, node, point_leaf=None):
        """The sub-dendrogram under ``node``; leaves keep their relative order."""
        leaves = self.leaf_sets[node]
        return self.restrict(leaves, point_leaf)

    def restrict(self, leaves, point_leaf=None):
        """Induced sub-space on a set of leaves (unary nodes are suppressed)."""
        leaves = np.unique(np.asarray(leaves, dtype=np.int64))
        if leaves.size == 0:
            raise DomainError("cannot restrict to an empty set")
        if point_leaf is None:
            point_leaf = self.point if self.point in leaves else int(leaves[0])
        L = self.n_leaves
        new_id = {int(l): i for i, l in enumerate(leaves)}
        rep = {}  # old node -> new node id representing it (None if empty)
        for l in leaves:
            rep[int(l)] = new_id[int(l)]
        children, heights = [], []
        for i, ch in enumerate(self.children):
            kids = [rep[c] for c in ch if c in rep]
            if len(kids) == 1:
                rep[L + i] = kids[0]
            elif len(kids) >= 2:
                children.append(tuple(kids))
                heights.append(self.heights[i])
                rep[L + i] = leaves.size + len(children) - 1
        masses = None if self.masses is None else self.masses[leaves]
        labels = None if self.labels is None else tuple(self.labels[l] for l in leaves)
        return Dendrogram(int(leaves.size), tuple(children), np.array(heights),
                          new_id[int(point_leaf)], masses, labels)

    def ball(self, center=None, radius=1.0):
        """Closed ball ``B(center, radius)``, pointed at ``center``."""
        center = self.point if center is None else center
        if not 0 <= center < self.n_leaves:
            raise DomainError(f"center {center} is not a leaf")
        return self.subtree(self.ancestor_at(center, radius), center)

    def cluster_roots(self, radius):
        """Nodes whose subtrees are the closed ``radius``-balls."""
        par = self.parent
        roots = []
        for node in range(self.n_nodes):
            p = par[node]
            if self.node_height(node) <= radius and (p < 0 or self.node_height(p) > radius):
                roots.append(node)
        return roots

    def ball_count(self, radius):
        if radius < 0:
            raise DomainError("radius must be nonnegative")
        # clusters = leaves minus the merges at or below the radius
        merged = sum(len(ch) - 1 for ch, h in zip(self.children, self.heights) if h <= radius)
        return self.n_leaves - merged

    def ball_decomposition(self, radius, center=None, outer=None):
        """Partition into maximal closed balls of ``radius``.

        With ``outer`` given, only ``B(center, outer)`` is partitioned.
        """
        if radius < 0:
            raise DomainError("radius must be nonnegative")
        space = self if outer is None else self.ball(center, outer)
        return [space.subtree(node) for node in space.cluster_roots(radius)]

    def space_from_balls(self, eta):
        """Quotient whose points are the closed ``eta``-balls."""
        roots = self.cluster_roots(eta)
        L = self.n_leaves
        rep = {node: i for i, node in enumerate(roots)}
        point_ball = rep[self.ancestor_at(self.point, eta)]
        masses = None
        if self.masses is not None:
            masses = np.array([self.masses[self.leaf_sets[r]].sum() for r in roots])
        children, heights = [], []
        for i, ch in enumerate(self.children):
            if self.heights[i] <= eta:
                continue
            children.append(tuple(rep[c] for c in ch))
            heights.append(self.heights[i])
            rep[L + i] = len(roots) + len(children) - 1
        return Dendrogram(len(roots), tuple(children), np.array(heights), point_ball, masses)

    def radius_about_point(self):
        D = self.distance_matrix()
        return float(D[self.point].max())

    # -- serialization -----------------------------------------------------------

    def to_text(self):
        """Line format: ``leaf <i> [mass]``, ``point <i>``, ``merge <c..> <h>``.

        Floats are written with ``repr`` so a round trip is bit-exact.
        """
        lines = [f"dendrogram {self.n_leaves}"]
        for i in range(self.n_leaves):
            m = "" if self.masses is None else f" {float(self.masses[i])!r}"
            lines.append(f"leaf {i}{m}")
        lines.append(f"point {self.point}")
        for ch, h in zip(self.children, self.heights):
            lines.append("merge " + " ".join(str(c) for c in ch) + f" {float(h)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        n = None
        masses, children, heights = [], [], []
        point = 0
        for raw in text.splitlines():
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            if tag == "dendrogram":
                n = int(parts[1])
            elif tag == "leaf":
                if len(parts) > 2:
                    masses.append(float(parts[2]))
            elif tag == "point":
                point = int(parts[1])
            elif tag == "merge":
                children.append(tuple(int(c) for c in parts[1:-1]))
                heights.append(float(parts[-1]))
            else:
                raise DomainError(f"unknown line {raw!r}")
        if n is None:
            raise DomainError("missing 'dendrogram <n>' header")
        if masses and len(masses) != n:
            raise DomainError("either every leaf or no leaf carries a mass")
        return cls(n, tuple(children), np.array(heights), point,
                   np.array(masses) if masses else None)

    def same_as(self, other):
        """Exact structural equality (same tree, heights, point and masses)."""
        if (self.n_leaves, self.children, self.point) != (other.n_leaves, other.children, other.point):
            return False
        if not np.array_equal(self.heights, other.heights):
            return False
        if (self.masses is None) != (other.masses is None):
            return False
        return self.masses is None or np.array_equal(self.masses, other.masses)


def random_dendrogram(n_leaves, rng, max_arity=3, masses=False):
    """Random merge tree: repeatedly fuse 2..``max_arity`` random clusters at rising heights."""
    if n_leaves < 1:
        raise DomainError("need at least one leaf")
    if n_leaves == 1:
        return Dendrogram.singleton(1.0 if masses else None)
    active = list(range(n_leaves))
    children, heights = [], []
    h = 0.0
    while len(active) > 1:
        k = int(rng.integers(2, min(max_arity, len(active)) + 1))
        pick = sorted(rng.choice(len(active), size=k, replace=False).tolist(), reverse=True)
        kids = tuple(active.pop(i) for i in pick)
        h += float(rng.exponential(1.0))
        children.append(kids)
        heights.append(h)
        active.append(n_leaves + len(children) - 1)
    m = rng.dirichlet(np.ones(n_leaves)) if masses else None
    return Dendrogram(n_leaves, tuple(children), np.array(heights), int(rng.integers(n_leaves)), m)
