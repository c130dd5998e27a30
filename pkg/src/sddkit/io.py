"""Matrix Market and edge-list text I/O."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .graph import GraphError, SddMatrix, WeightedGraph

__all__ = [
    "MatrixMarketError",
    "load_matrix_market",
    "store_matrix_market",
    "load_edge_list",
    "store_edge_list",
]


class MatrixMarketError(GraphError):
    pass


def _tokens(fh, path):
    for lineno, line in enumerate(fh, start=2):
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        yield lineno, s.split()


def load_matrix_market(path):
    """Read a real coordinate Matrix Market file into an ``SddMatrix``.

    ``symmetric`` files must store the lower triangle only; ``general``
    files are accepted if the stored data is symmetric.
    """
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().split()
        if (
            len(header) != 5
            or header[0].lower() != "%%matrixmarket"
            or header[1].lower() != "matrix"
            or header[2].lower() != "coordinate"
        ):
            raise MatrixMarketError(f"{path}: malformed header {' '.join(header)!r}")
        field, symm = header[3].lower(), header[4].lower()
        if field not in ("real", "integer", "double"):
            raise MatrixMarketError(f"{path}: unsupported field {field!r}")
        if symm not in ("symmetric", "general"):
            raise MatrixMarketError(f"{path}: unsupported symmetry {symm!r}")
        lines = _tokens(fh, path)
        try:
            lineno, size = next(lines)
        except StopIteration:
            raise MatrixMarketError(f"{path}: missing size line") from None
        if len(size) != 3:
            raise MatrixMarketError(f"{path}:{lineno}: malformed size line")
        nr, nc, nnz = (int(t) for t in size)
        if nr != nc:
            raise MatrixMarketError(f"{path}: matrix is {nr}x{nc}, not square")
        rows, cols, vals = [], [], []
        for lineno, tok in lines:
            if len(tok) != 3:
                raise MatrixMarketError(f"{path}:{lineno}: expected 'i j value'")
            i, j, x = int(tok[0]) - 1, int(tok[1]) - 1, float(tok[2])
            if not (0 <= i < nr and 0 <= j < nc):
                raise MatrixMarketError(f"{path}:{lineno}: index out of range")
            if not math.isfinite(x):
                raise MatrixMarketError(f"{path}:{lineno}: non-finite value {tok[2]}")
            if symm == "symmetric" and j > i:
                raise MatrixMarketError(
                    f"{path}:{lineno}: upper-triangle entry ({i + 1}, {j + 1}) in symmetric storage"
                )
            rows.append(i)
            cols.append(j)
            vals.append(x)
    if len(vals) != nnz:
        raise MatrixMarketError(f"{path}: header promises {nnz} entries, found {len(vals)}")
    rows = np.array(rows, dtype=np.int64)
    cols = np.array(cols, dtype=np.int64)
    vals = np.array(vals, dtype=np.float64)
    if symm == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    try:
        return SddMatrix(sp.csr_matrix((vals, (rows, cols)), shape=(nr, nr)))
    except GraphError as exc:
        raise MatrixMarketError(f"{path}: {exc}") from None


def store_matrix_market(a, path, comment=None):
    """Write the lower triangle of ``a`` in symmetric coordinate format.

    Values are written with ``repr`` so a reload is bit-exact.
    """
    if isinstance(a, WeightedGraph):
        a = SddMatrix(a.laplacian())
    lower = sp.tril(a.matrix).tocoo()
    order = np.lexsort((lower.row, lower.col))
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{a.n} {a.n} {lower.nnz}\n")
        for k in order:
            fh.write(f"{lower.row[k] + 1} {lower.col[k] + 1} {float(lower.data[k])!r}\n")


def load_edge_list(path):
    """Read ``n m`` then ``m`` lines of ``u v w`` (0-based)."""
    path = Path(path)
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or len(lines[0]) != 2:
        raise GraphError(f"{path}: expected 'n m' header line")
    n, m = int(lines[0][0]), int(lines[0][1])
    body = lines[1:]
    if len(body) != m:
        raise GraphError(f"{path}: header promises {m} edges, found {len(body)}")
    if m == 0:
        return WeightedGraph(n, [], [], [])
    if any(len(t) != 3 for t in body):
        raise GraphError(f"{path}: edge lines must be 'u v w'")
    arr = np.array(body, dtype=object)
    return WeightedGraph(n, arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2].astype(np.float64))


def store_edge_list(g, path):
    """Write ``g`` as an edge list to a path or an open text stream."""
    if hasattr(path, "write"):
        _write_edges(g, path)
        return
    with open(path, "w") as fh:
        _write_edges(g, fh)


def _write_edges(g, fh):
    fh.write(f"{g.n} {g.m}\n")
    for a, b, w in zip(g.u.tolist(), g.v.tolist(), g.w.tolist()):
        fh.write(f"{a} {b} {w!r}\n")
