"""Weighted graphs, Laplacian operators and the SDD -> Laplacian reduction."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

__all__ = [
    "GraphError",
    "DisconnectedGraphError",
    "WeightedGraph",
    "SddMatrix",
    "ReductionMap",
    "laplacian_apply",
    "sdd_to_laplacian",
    "generate",
    "project_mean_zero",
]


class GraphError(ValueError):
    """Invalid graph or matrix input."""


class DisconnectedGraphError(GraphError):
    """Raised by operations that require a connected graph."""

    def __init__(self, component_sizes):
        self.component_sizes = sorted((int(s) for s in component_sizes), reverse=True)
        super().__init__(
            f"graph is disconnected: {len(self.component_sizes)} components "
            f"of sizes {self.component_sizes[:10]}"
            + ("..." if len(self.component_sizes) > 10 else "")
        )


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class WeightedGraph:
    """Undirected simple graph with strictly positive edge weights.

    Edges are stored canonically with ``u < v`` and sorted by ``(u, v)``.
    Parallel edges given at construction are merged by summing weights.

    Parameters
    ----------
    n : int
        Number of vertices.
    u, v : array_like of int
        Edge endpoints.
    w : array_like of float
        Edge weights, strictly positive and finite.
    """

    __slots__ = ("n", "u", "v", "w", "_indptr", "_nbr", "_eid", "_lap", "_ncomp", "_labels")

    def __init__(self, n, u, v, w):
        n = int(n)
        if n < 1:
            raise GraphError("graph needs at least one vertex")
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        w = np.asarray(w, dtype=np.float64).ravel()
        if not (len(u) == len(v) == len(w)):
            raise GraphError("edge arrays differ in length")
        if len(u):
            if u.min() < 0 or v.min() < 0 or u.max() >= n or v.max() >= n:
                raise GraphError("edge endpoint out of range")
            if np.any(u == v):
                k = int(np.flatnonzero(u == v)[0])
                raise GraphError(f"self-loop at vertex {int(u[k])}")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                k = int(np.flatnonzero(~(np.isfinite(w) & (w > 0)))[0])
                raise GraphError(f"edge ({int(u[k])}, {int(v[k])}) has non-positive or non-finite weight {w[k]!r}")
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        key = lo * n + hi
        order = np.argsort(key, kind="stable")
        key = key[order]
        uniq, start = np.unique(key, return_index=True)
        if len(uniq) != len(key):
            w = np.add.reduceat(w[order], start)
        else:
            w = w[order]
        self.n = n
        self.u = _frozen(uniq // n)
        self.v = _frozen(uniq % n)
        self.w = _frozen(w)
        self._indptr = None
        self._lap = None
        self._ncomp = None

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_edges(cls, n, edges):
        """Build from an iterable of ``(u, v, w)`` triples."""
        edges = list(edges)
        if not edges:
            return cls(n, [], [], [])
        u, v, w = zip(*edges)
        return cls(n, u, v, w)

    @classmethod
    def from_laplacian(cls, lap, tol=1e-12):
        """Recover the graph of a (sparse or dense) Laplacian matrix."""
        lap = sp.coo_matrix(lap)
        mask = (lap.row < lap.col) & (lap.data != 0)
        r, c, d = lap.row[mask], lap.col[mask], lap.data[mask]
        if np.any(d > 0):
            raise GraphError("Laplacian has a positive off-diagonal entry")
        g = cls(lap.shape[0], r, c, -d)
        rs = np.asarray(sp.csr_matrix(lap).sum(axis=1)).ravel()
        scale = max(1.0, float(np.abs(lap.data).max(initial=0.0)))
        if np.any(np.abs(rs) > tol * scale):
            raise GraphError("matrix rows do not sum to zero")
        return g

    # -- basic properties -----------------------------------------------------

    @property
    def m(self):
        return len(self.w)

    @property
    def edges(self):
        return list(zip(self.u.tolist(), self.v.tolist(), self.w.tolist()))

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, m={self.m})"

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.w, other.w)
        )

    __hash__ = None

    def allclose(self, other, rtol=1e-12, atol=0.0):
        """Same vertex set and edge set with weights equal to tolerance."""
        return (
            self.n == other.n
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
            and np.allclose(self.w, other.w, rtol=rtol, atol=atol)
        )

    def _build_adjacency(self):
        n, m = self.n, self.m
        ends = np.concatenate([self.u, self.v])
        other = np.concatenate([self.v, self.u])
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((other, ends))
        counts = np.bincount(ends, minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        self._indptr = _frozen(indptr)
        self._nbr = _frozen(other[order])
        self._eid = _frozen(eid[order])

    @property
    def adjacency(self):
        """CSR adjacency ``(indptr, neighbor, edge_id)``; neighbors ascending."""
        if self._indptr is None:
            self._build_adjacency()
        return self._indptr, self._nbr, self._eid

    def degree(self):
        indptr = self.adjacency[0]
        return np.diff(indptr)

    def weighted_degree(self):
        d = np.zeros(self.n)
        np.add.at(d, self.u, self.w)
        np.add.at(d, self.v, self.w)
        return d

    def laplacian(self):
        """Sparse CSR Laplacian (cached)."""
        if self._lap is None:
            n = self.n
            d = self.weighted_degree()
            rows = np.concatenate([self.u, self.v, np.arange(n)])
            cols = np.concatenate([self.v, self.u, np.arange(n)])
            vals = np.concatenate([-self.w, -self.w, d])
            lap = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
            lap.sum_duplicates()
            self._lap = lap
        return self._lap

    def components(self):
        """Number of connected components and per-vertex labels."""
        if self._ncomp is None:
            adj = sp.csr_matrix((np.ones(self.m), (self.u, self.v)), shape=(self.n, self.n))
            self._ncomp, self._labels = connected_components(adj, directed=False)
        return self._ncomp, self._labels

    def is_connected(self):
        return self.components()[0] == 1

    def require_connected(self):
        k, labels = self.components()
        if k != 1:
            raise DisconnectedGraphError(np.bincount(labels))

    # -- derived graphs -------------------------------------------------------

    def scaled(self, factor):
        return WeightedGraph(self.n, self.u, self.v, self.w * float(factor))

    def reweighted(self, w):
        return WeightedGraph(self.n, self.u, self.v, w)

    def subgraph(self, edge_ids):
        edge_ids = np.asarray(edge_ids, dtype=np.int64)
        return WeightedGraph(self.n, self.u[edge_ids], self.v[edge_ids], self.w[edge_ids])

    def edge_index(self, a, b):
        """Id of the edge ``{a, b}``; ``KeyError`` if absent."""
        a, b = min(a, b), max(a, b)
        key = self.u * self.n + self.v
        k = int(np.searchsorted(key, a * self.n + b))
        if k < self.m and key[k] == a * self.n + b:
            return k
        raise KeyError((a, b))

    def quadratic_form(self, x):
        x = np.asarray(x, dtype=np.float64)
        d = x[self.u] - x[self.v]
        return float(np.dot(self.w, d * d))


def laplacian_apply(g, x):
    """Return ``L_G @ x`` without forming a dense matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != g.n:
        raise ValueError(f"vector has length {x.shape[0]}, graph has {g.n} vertices")
    return g.laplacian() @ x


def project_mean_zero(b, what="right-hand side", warn=True):
    """Subtract the mean; warn when the input had a component along ones.

    Returns the projected vector and the warning message (or ``None``).
    """
    b = np.asarray(b, dtype=np.float64)
    mean = b.mean() if b.size else 0.0
    scale = np.abs(b).max(initial=0.0)
    msg = None
    if scale > 0 and abs(mean) > 1e-12 * scale:
        msg = f"{what} not orthogonal to the all-ones vector (mean {mean:.3e}); projected"
        if warn:
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return b - mean, msg


@dataclass(frozen=True)
class SddMatrix:
    """Symmetric diagonally dominant matrix stored as sparse CSR.

    Validation happens in ``__post_init__``; a violated dominance
    condition names the first offending row.
    """

    matrix: sp.csr_matrix
    tol: float = 1e-12

    def __post_init__(self):
        a = sp.csr_matrix(self.matrix, dtype=np.float64)
        a.sum_duplicates()
        a.eliminate_zeros()
        if a.shape[0] != a.shape[1]:
            raise GraphError(f"matrix is not square: {a.shape}")
        if not np.all(np.isfinite(a.data)):
            raise GraphError("matrix has NaN or Inf entries")
        diff = a - a.T
        if diff.nnz and np.abs(diff.data).max() > 0:
            r, c = diff.nonzero()
            raise GraphError(f"matrix is not symmetric at entry ({r[0]}, {c[0]})")
        diag = a.diagonal()
        off = np.asarray(abs(a).sum(axis=1)).ravel() - np.abs(diag)
        bad = np.flatnonzero(diag < off - self.tol * np.maximum(np.abs(diag), off))
        if len(bad):
            i = int(bad[0])
            raise GraphError(
                f"row {i} is not diagonally dominant: A[{i},{i}] = {diag[i]!r} < {off[i]!r}"
            )
        object.__setattr__(self, "matrix", a)

    @classmethod
    def from_dense(cls, a, tol=1e-12):
        return cls(sp.csr_matrix(np.asarray(a, dtype=np.float64)), tol)

    @classmethod
    def from_coo(cls, n, rows, cols, vals, tol=1e-12):
        return cls(sp.csr_matrix((vals, (rows, cols)), shape=(n, n)), tol)

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def diagonal(self):
        return self.matrix.diagonal()

    @property
    def entries(self):
        """Canonical coordinate list ``(i, j, value)``, row-major."""
        c = self.matrix.tocoo()
        order = np.lexsort((c.col, c.row))
        return list(zip(c.row[order].tolist(), c.col[order].tolist(), c.data[order].tolist()))

    def row_excess(self):
        a = self.matrix
        diag = a.diagonal()
        return diag - (np.asarray(abs(a).sum(axis=1)).ravel() - np.abs(diag))

    def is_laplacian(self):
        a = self.matrix.tocoo()
        offdiag = a.data[a.row != a.col]
        if np.any(offdiag > 0):
            return False
        scale = max(1.0, float(np.abs(self.diagonal).max(initial=0.0)))
        return bool(np.all(np.abs(self.row_excess()) <= self.tol * scale))

    def __eq__(self, other):
        if not isinstance(other, SddMatrix):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and (self.matrix != other.matrix).nnz == 0

    __hash__ = None


@dataclass(frozen=True)
class ReductionMap:
    """Correspondence between an SDD system and its Laplacian system.

    ``kind`` is ``"identity"`` or ``"double-cover"``.  For the double cover,
    vertex ``i`` maps to ``u_i = i`` and its mirror ``n + i``.
    """

    kind: str
    original_n: int
    forward: np.ndarray = field(repr=False)
    mirror: np.ndarray | None = field(default=None, repr=False)

    def lift_rhs(self, b):
        b = np.asarray(b, dtype=np.float64)
        if self.kind == "identity":
            return b.copy()
        return np.concatenate([b, -b])

    def backward(self, xhat):
        xhat = np.asarray(xhat, dtype=np.float64)
        if self.kind == "identity":
            return xhat[self.forward]
        return 0.5 * (xhat[self.forward] - xhat[self.mirror])


def sdd_to_laplacian(a, b):
    """Reduce ``A x = b`` with SDD ``A`` to a Laplacian system.

    Returns ``(graph, rhs, reduction_map)``.  A matrix that already is a
    Laplacian maps to itself.  Otherwise the 2n-vertex double cover is
    built: negative off-diagonals join ``(u_i, u_j)`` and ``(ū_i, ū_j)``,
    positive ones join ``(u_i, ū_j)`` and ``(u_j, ū_i)``, and a row excess
    ``d_i`` becomes the edge ``(u_i, ū_i)`` with weight ``d_i / 2``.  The
    solution is recovered as ``x_i = (x̂[u_i] - x̂[ū_i]) / 2``.
    """
    if not isinstance(a, SddMatrix):
        a = SddMatrix(sp.csr_matrix(a))
    n = a.n
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (n,):
        raise ValueError(f"rhs has shape {b.shape}, expected ({n},)")
    idx = np.arange(n)
    if a.is_laplacian():
        g = WeightedGraph.from_laplacian(a.matrix, tol=max(a.tol, 1e-12))
        return g, b.copy(), ReductionMap("identity", n, idx)

    c = sp.triu(a.matrix, k=1).tocoo()
    neg = c.data < 0
    pos = ~neg
    i, j, val = c.row, c.col, c.data
    excess = np.maximum(a.row_excess(), 0.0)
    ex = np.flatnonzero(excess > 0)
    us = [i[neg], i[neg] + n, i[pos], j[pos], ex]
    vs = [j[neg], j[neg] + n, j[pos] + n, i[pos] + n, ex + n]
    ws = [-val[neg], -val[neg], val[pos], val[pos], 0.5 * excess[ex]]
    g = WeightedGraph(2 * n, np.concatenate(us), np.concatenate(vs), np.concatenate(ws))
    rmap = ReductionMap("double-cover", n, idx, idx + n)
    return g, rmap.lift_rhs(b), rmap


# -- generators ---------------------------------------------------------------


def _grid_edges(rows, cols):
    ids = np.arange(rows * cols).reshape(rows, cols)
    horiz = np.stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()])
    vert = np.stack([ids[:-1, :].ravel(), ids[1:, :].ravel()])
    e = np.concatenate([horiz, vert], axis=1)
    return e[0], e[1]


def generate(family, *params, seed=0, weights=None):
    """Deterministic graph generators.

    Families and their positional parameters::

        path(n)  cycle(n)  grid2d(rows, cols)  complete(n)  star(n)
        random(n, m)

    ``weights`` may be ``None`` (unit weights) or ``(low, high)`` for
    log-uniform random weights drawn from ``seed``.
    """
    rng = np.random.default_rng(seed)
    if any(int(p) < 1 for p in params):
        raise GraphError(f"size parameters must be >= 1, got {params}")
    params = [int(p) for p in params]
    if family == "path":
        (n,) = params
        u, v = np.arange(n - 1), np.arange(1, n)
    elif family == "cycle":
        (n,) = params
        if n < 3:
            raise GraphError("cycle needs n >= 3")
        u, v = np.arange(n), (np.arange(n) + 1) % n
    elif family == "grid2d":
        rows, cols = params
        n = rows * cols
        u, v = _grid_edges(rows, cols)
    elif family == "complete":
        (n,) = params
        u, v = np.triu_indices(n, k=1)
    elif family == "star":
        (n,) = params
        u, v = np.zeros(n - 1, dtype=np.int64), np.arange(1, n)
    elif family == "random":
        n, m = params
        if m < n - 1:
            raise GraphError(f"random graph with n={n} needs m >= n-1, got m={m}")
        if m > n * (n - 1) // 2:
            raise GraphError(f"random graph with n={n} cannot have m={m} simple edges")
        # random recursive tree for connectivity, then distinct extra edges
        perm = rng.permutation(n)
        tu = perm[1:]
        tv = perm[(rng.random(n - 1) * np.arange(1, n)).astype(np.int64)]
        keys = set((np.minimum(tu, tv) * n + np.maximum(tu, tv)).tolist())
        while len(keys) < m:
            need = m - len(keys)
            a = rng.integers(0, n, size=2 * need + 8)
            c = rng.integers(0, n, size=2 * need + 8)
            for x, y in zip(a.tolist(), c.tolist()):
                if x != y:
                    k = min(x, y) * n + max(x, y)
                    if k not in keys:
                        keys.add(k)
                        if len(keys) == m:
                            break
        keys = np.array(sorted(keys), dtype=np.int64)
        u, v = keys // n, keys % n
    else:
        raise GraphError(f"unknown graph family {family!r}")
    if weights is None:
        w = np.ones(len(u))
    else:
        lo, hi = weights
        w = np.exp(rng.uniform(np.log(lo), np.log(hi), size=len(u)))
    return WeightedGraph(n, u, v, w)
