"""Greedy elimination of degree-1 and degree-2 vertices.

The eliminated vertices form the leading block of a partial Cholesky
factorization ``L diag(D, A_reduced) L^T``; :class:`EliminationFactor`
keeps exactly what is needed for O(n) forward and back substitution.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from .graph import WeightedGraph, project_mean_zero

__all__ = [
    "Degree1",
    "Degree2",
    "EliminationFactor",
    "greedy_elimination",
    "factor_forward",
    "factor_backward",
    "factor_solve",
]


class Degree1(NamedTuple):
    v: int
    u: int
    w: float


class Degree2(NamedTuple):
    v: int
    u1: int
    u2: int
    w1: float
    w2: float
    merged: float


@dataclass(frozen=True)
class EliminationFactor:
    """Pivot record of a greedy elimination over an ``n``-vertex graph.

    Step ``k`` eliminates ``pivots[k]`` into ``u1[k]`` (and ``u2[k]`` for
    degree 2, else -1) with charge fractions ``a1``/``a2`` and inverse
    pivot ``dinv = 1 / (w1 + w2)``.  ``survivors`` lists the kept vertices
    in ascending order; ``survivor_map[x]`` is the reduced id of ``x`` or -1.
    """

    n: int
    pivots: np.ndarray = field(repr=False)
    u1: np.ndarray = field(repr=False)
    u2: np.ndarray = field(repr=False)
    w1: np.ndarray = field(repr=False)
    w2: np.ndarray = field(repr=False)
    survivors: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = self.w1 + self.w2
        object.__setattr__(self, "a1", self.w1 / d)
        object.__setattr__(self, "a2", self.w2 / d)
        object.__setattr__(self, "dinv", 1.0 / d)
        smap = np.full(self.n, -1, dtype=np.int64)
        smap[self.survivors] = np.arange(len(self.survivors))
        object.__setattr__(self, "survivor_map", smap)

    @classmethod
    def empty(cls, n):
        z = np.zeros(0, dtype=np.int64)
        f = np.zeros(0)
        return cls(n, z, z, z, f, f, np.arange(n))

    @property
    def eliminated(self):
        return self.pivots

    @property
    def n_reduced(self):
        return len(self.survivors)

    def __len__(self):
        return len(self.pivots)

    @property
    def steps(self):
        out = []
        for k in range(len(self.pivots)):
            v, a, b = int(self.pivots[k]), int(self.u1[k]), int(self.u2[k])
            w1, w2 = float(self.w1[k]), float(self.w2[k])
            if b < 0:
                out.append(Degree1(v, a, w1))
            else:
                out.append(Degree2(v, a, b, w1, w2, w1 * w2 / (w1 + w2)))
        return out


def greedy_elimination(g):
    """Eliminate degree-1 and degree-2 vertices until none remain.

    Uses a FIFO worklist seeded with all vertices of degree <= 2 in
    ascending order; a neighbour is re-queued when its degree drops to 2
    or below.  A degree-2 splice whose new edge is parallel to an existing
    one adds the weights.  Stops early if a single vertex is left.
    Returns ``(reduced_graph, factor)``.
    """
    g.require_connected()
    n = g.n
    adj = [dict() for _ in range(n)]
    for a, b, w in zip(g.u.tolist(), g.v.tolist(), g.w.tolist()):
        adj[a][b] = w
        adj[b][a] = w
    removed = np.zeros(n, dtype=bool)
    queued = np.zeros(n, dtype=bool)
    queue = deque()
    for x in range(n):
        if len(adj[x]) <= 2:
            queue.append(x)
            queued[x] = True
    piv, nb1, nb2, ww1, ww2 = [], [], [], [], []
    alive = n
    while queue and alive > 1:
        v = queue.popleft()
        queued[v] = False
        nbrs = adj[v]
        d = len(nbrs)
        if d == 1:
            (u, w), = nbrs.items()
            del adj[u][v]
            piv.append(v), nb1.append(u), nb2.append(-1), ww1.append(w), ww2.append(0.0)
            touched = (u,)
        elif d == 2:
            (x1, y1), (x2, y2) = sorted(nbrs.items())
            merged = y1 * y2 / (y1 + y2)
            del adj[x1][v]
            del adj[x2][v]
            adj[x1][x2] = adj[x1].get(x2, 0.0) + merged
            adj[x2][x1] = adj[x2].get(x1, 0.0) + merged
            piv.append(v), nb1.append(x1), nb2.append(x2), ww1.append(y1), ww2.append(y2)
            touched = (x1, x2)
        else:
            continue
        adj[v] = {}
        removed[v] = True
        alive -= 1
        for u in touched:
            if not queued[u] and len(adj[u]) <= 2:
                queue.append(u)
                queued[u] = True

    survivors = np.flatnonzero(~removed)
    smap = np.full(n, -1, dtype=np.int64)
    smap[survivors] = np.arange(len(survivors))
    eu, ev, ew = [], [], []
    for a in survivors.tolist():
        for b, w in adj[a].items():
            if a < b:
                eu.append(smap[a]), ev.append(smap[b]), ew.append(w)
    reduced = WeightedGraph(len(survivors), eu, ev, ew)
    factor = EliminationFactor(
        n,
        np.array(piv, dtype=np.int64),
        np.array(nb1, dtype=np.int64),
        np.array(nb2, dtype=np.int64),
        np.array(ww1, dtype=np.float64),
        np.array(ww2, dtype=np.float64),
        survivors,
    )
    return reduced, factor


def _forward(f, c):
    work = np.array(c, dtype=np.float64, copy=True)
    _kernels.forward_substitution(work, f.pivots, f.u1, f.u2, f.a1, f.a2)
    return work[f.pivots], work[f.survivors]


def _backward(f, c_top, x_bottom):
    x = np.empty(f.n)
    x[f.survivors] = x_bottom
    _kernels.backward_substitution(x, c_top, f.pivots, f.u1, f.u2, f.a1, f.a2, f.dinv)
    return x


def factor_forward(f, c):
    """Split ``c`` into eliminated-pivot values and the reduced right-hand side."""
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (f.n,):
        raise ValueError(f"vector has shape {c.shape}, factor expects ({f.n},)")
    c, _ = project_mean_zero(c)
    return _forward(f, c)


def factor_backward(f, c_top, x_bottom):
    """Recover the full solution from pivot values and a reduced solution."""
    c_top = np.asarray(c_top, dtype=np.float64)
    x_bottom = np.asarray(x_bottom, dtype=np.float64)
    if c_top.shape != (len(f.pivots),) or x_bottom.shape != (f.n_reduced,):
        raise ValueError(
            f"shapes {c_top.shape}, {x_bottom.shape} do not match factor "
            f"({len(f.pivots)} pivots, {f.n_reduced} survivors)"
        )
    return _backward(f, c_top, x_bottom)


def factor_solve(f, reduced_solve, c):
    """Solve with the factored graph given a solver for the reduced graph."""
    c_top, c_bottom = factor_forward(f, c)
    x = factor_backward(f, c_top, reduced_solve(c_bottom))
    return x - x.mean()
