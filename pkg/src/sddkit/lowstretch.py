"""Low-stretch spanning trees and exact per-edge stretch."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .graph import GraphError, WeightedGraph

__all__ = [
    "SpanningTree",
    "StretchTable",
    "low_stretch_tree",
    "shortest_path_tree",
    "star_decomposition_tree",
    "compute_stretch",
    "scaled_probabilities",
]


@dataclass(frozen=True)
class SpanningTree:
    """A rooted spanning tree of ``graph``.

    ``parent[root] == root`` and ``parent_edge[root] == -1``; every other
    ``parent_edge[x]`` is the id of the graph edge joining ``x`` to its
    parent.  ``scale`` multiplies the weights of tree edges.
    """

    graph: WeightedGraph = field(repr=False)
    root: int
    parent: np.ndarray = field(repr=False)
    parent_edge: np.ndarray = field(repr=False)
    scale: float = 1.0
    method: str = ""
    total_stretch: float | None = None

    def __post_init__(self):
        if self.scale < 1:
            raise ValueError(f"tree scale must be >= 1, got {self.scale}")

    @property
    def n(self):
        return self.graph.n

    @property
    def edge_ids(self):
        pe = self.parent_edge
        return np.sort(pe[pe >= 0])

    def tree_mask(self):
        mask = np.zeros(self.graph.m, dtype=bool)
        mask[self.edge_ids] = True
        return mask

    def with_scale(self, kappa):
        if kappa < 1:
            raise ValueError(f"kappa must be >= 1, got {kappa}")
        return SpanningTree(self.graph, self.root, self.parent, self.parent_edge,
                            float(kappa), self.method, None)

    def children(self):
        """Children CSR ``(child_ptr, child_idx)`` with children ascending."""
        n = self.n
        nonroot = np.flatnonzero(np.arange(n) != self.root)
        par = self.parent[nonroot]
        order = np.lexsort((nonroot, par))
        counts = np.bincount(par, minlength=n)
        ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return ptr, nonroot[order].astype(np.int64)

    def preorder(self):
        ptr, idx = self.children()
        return _kernels.tree_order(self.n, self.root, ptr, idx)

    def as_graph(self):
        """The tree as a graph with tree edges multiplied by ``scale``."""
        g = self.graph
        ids = self.edge_ids
        return WeightedGraph(g.n, g.u[ids], g.v[ids], g.w[ids] * self.scale)

    def validate(self):
        n = self.n
        pe = self.parent_edge
        if self.parent[self.root] != self.root or pe[self.root] != -1:
            raise GraphError("root must be self-parented with no parent edge")
        nonroot = np.arange(n) != self.root
        if np.any(pe[nonroot] < 0) or np.any(pe[nonroot] >= self.graph.m):
            raise GraphError("every non-root vertex needs a parent edge of the graph")
        g = self.graph
        x = np.flatnonzero(nonroot)
        e = pe[x]
        p = self.parent[x]
        ok = ((g.u[e] == x) & (g.v[e] == p)) | ((g.v[e] == x) & (g.u[e] == p))
        if not np.all(ok):
            raise GraphError("parent edge does not join vertex and parent")
        if len(self.preorder()) != n:
            raise GraphError("parent pointers contain a cycle or do not span")
        return True


@dataclass(frozen=True)
class StretchTable:
    stretch: np.ndarray
    is_tree: np.ndarray
    total_stretch: float
    scale: float = 1.0

    @property
    def nontree_total(self):
        return float(self.stretch[~self.is_tree].sum())


def _tree_from_edges(g, root, edge_ids, method):
    n = g.n
    if len(edge_ids) != n - 1:
        raise GraphError(f"expected {n - 1} tree edges, got {len(edge_ids)}")
    t = WeightedGraph(n, g.u[edge_ids], g.v[edge_ids], np.ones(len(edge_ids)))
    # t reorders its edges canonically; map back through the (u, v) key
    key_g = g.u[edge_ids] * n + g.v[edge_ids]
    order = np.argsort(key_g)
    tree_to_graph = np.asarray(edge_ids)[order]
    indptr, nbr, eid = t.adjacency
    parent = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    parent[root] = root
    stack = [root]
    seen = np.zeros(n, dtype=bool)
    seen[root] = True
    while stack:
        x = stack.pop()
        for p in range(indptr[x], indptr[x + 1]):
            y = nbr[p]
            if not seen[y]:
                seen[y] = True
                parent[y] = x
                parent_edge[y] = tree_to_graph[eid[p]]
                stack.append(y)
    if not seen.all():
        raise GraphError("edge set does not span the graph")
    return SpanningTree(g, int(root), parent, parent_edge, 1.0, method)


def _lengths(g):
    return 1.0 / g.w


def _center(g):
    """Approximate weighted center from a double sweep."""
    indptr, nbr, eid = g.adjacency
    ln = _lengths(g)
    d0 = _kernels.dijkstra(indptr, nbr, eid, ln, g.n, 0)[0]
    a = int(np.argmax(d0))
    da, pred, _, _ = _kernels.dijkstra(indptr, nbr, eid, ln, g.n, a)
    b = int(np.argmax(da))
    half = da[b] / 2.0
    x = b
    while pred[x] >= 0 and da[pred[x]] >= half:
        x = int(pred[x])
    return x


def shortest_path_tree(g, root=None):
    """Shortest-path tree for edge lengths ``1/w``."""
    g.require_connected()
    if root is None:
        root = _center(g)
    indptr, nbr, eid = g.adjacency
    _, pred, pred_edge, _ = _kernels.dijkstra(indptr, nbr, eid, _lengths(g), g.n, root)
    pred[root] = root
    return SpanningTree(g, int(root), pred, pred_edge, 1.0, "shortest-path")


def star_decomposition_tree(g, root=None, cone_frac=0.25):
    """Tree from recursive ball/cone decomposition around ``root``."""
    g.require_connected()
    if root is None:
        root = _center(g)
    indptr, nbr, eid = g.adjacency
    ids = _kernels.star_decomposition_tree(indptr, nbr, eid, _lengths(g), g.n, int(root), cone_frac)
    return _tree_from_edges(g, root, ids, "star-decomposition")


def low_stretch_tree(g):
    """Build both candidate trees and keep the one with smaller total stretch.

    Ties go to the star decomposition.  The returned tree carries its
    ``total_stretch``.
    """
    g.require_connected()
    if g.n == 1:
        return SpanningTree(g, 0, np.zeros(1, dtype=np.int64), np.full(1, -1, dtype=np.int64),
                            1.0, "trivial", 0.0)
    root = _center(g)
    best = None
    for build in (star_decomposition_tree, shortest_path_tree):
        t = build(g, root)
        total = compute_stretch(g, t).total_stretch
        if best is None or total < best[0]:
            best = (total, t)
    total, t = best
    return SpanningTree(g, t.root, t.parent, t.parent_edge, 1.0, t.method, total)


def compute_stretch(g, t):
    """Per-edge stretch of ``g`` over the (possibly scaled) tree ``t``.

    Tree-path resistances come from root prefix sums and an offline LCA
    pass; tree edges report exactly 1.
    """
    if t.graph is not g and (t.graph.n != g.n or not np.array_equal(t.graph.u, g.u)
                             or not np.array_equal(t.graph.v, g.v)):
        raise GraphError("tree was built over a different graph")
    n, m = g.n, g.m
    if len(t.parent) != n:
        raise GraphError("tree and graph differ in vertex count")
    is_tree = t.tree_mask()
    if m == 0:
        return StretchTable(np.zeros(0), is_tree, 0.0, t.scale)
    ptr, idx = t.children()
    order = _kernels.tree_order(n, t.root, ptr, idx)
    if len(order) != n:
        raise GraphError("tree does not span the graph")
    step = np.zeros(n)
    nonroot = np.arange(n) != t.root
    step[nonroot] = 1.0 / (t.scale * g.w[t.parent_edge[nonroot]])
    hi, lo = _kernels.prefix_resistance(order, t.parent, step)
    indptr, nbr, eid = g.adjacency
    lca = _kernels.offline_lca(n, t.root, t.parent, ptr, idx, indptr, nbr, eid, m)
    a, b = g.u, g.v
    path = (hi[a] - hi[lca]) + (hi[b] - hi[lca]) + ((lo[a] - lo[lca]) + (lo[b] - lo[lca]))
    stretch = g.w * path
    stretch[is_tree] = 1.0
    return StretchTable(stretch, is_tree, float(np.sum(stretch)), t.scale)


def scaled_probabilities(table, kappa):
    """Oversampling weights over a tree scaled by ``kappa``.

    Tree edges get 1; a non-tree edge gets its unscaled-tree stretch
    divided by ``kappa``.  A table computed against a tree of scale ``s``
    is converted first.
    """
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    p = table.stretch * (table.scale / float(kappa))
    p[table.is_tree] = 1.0
    return p
