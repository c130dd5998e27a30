"""Dense brute-force reference computations for small graphs.

Nothing here is used on the solve path.  The size cap defaults to 400
vertices and can be raised with the ``SDDKIT_ORACLE_LIMIT`` environment
variable.
"""

from __future__ import annotations

import os

import numpy as np
import scipy.linalg as la

__all__ = [
    "OracleLimitError",
    "oracle_limit",
    "dense_laplacian",
    "incidence_matrix",
    "dense_pseudoinverse",
    "effective_resistances",
    "projection_matrix",
    "mean_zero_basis",
    "generalized_eigenvalues",
    "sandwich_check",
    "dense_solve",
    "anorm",
]

DEFAULT_LIMIT = 400


class OracleLimitError(ValueError):
    pass


def oracle_limit():
    return int(os.environ.get("SDDKIT_ORACLE_LIMIT", DEFAULT_LIMIT))


def _check(g, limit=None):
    limit = oracle_limit() if limit is None else limit
    if g.n > limit:
        raise OracleLimitError(f"graph has {g.n} vertices, oracle limit is {limit}")


def dense_laplacian(g):
    _check(g)
    return g.laplacian().toarray()


def incidence_matrix(g):
    """Signed m x n incidence; row e is +1 at max(u, v), -1 at the head min(u, v)."""
    _check(g)
    m = g.m
    B = np.zeros((m, g.n))
    B[np.arange(m), g.u] = -1.0
    B[np.arange(m), g.v] = 1.0
    return B


def dense_pseudoinverse(g, rtol=1e-10):
    """Moore-Penrose pseudo-inverse of the Laplacian via ``eigh``."""
    L = dense_laplacian(g)
    lam, V = np.linalg.eigh(L)
    cut = rtol * max(lam[-1], 0.0)
    inv = np.zeros_like(lam)
    keep = lam > cut
    inv[keep] = 1.0 / lam[keep]
    Lp = (V * inv) @ V.T
    return 0.5 * (Lp + Lp.T)


def effective_resistances(g, Lp=None):
    if Lp is None:
        Lp = dense_pseudoinverse(g)
    d = np.diag(Lp)
    return d[g.u] + d[g.v] - 2.0 * Lp[g.u, g.v]


def projection_matrix(g, Lp=None):
    """``W^1/2 B L^+ B^T W^1/2`` (m x m)."""
    if Lp is None:
        Lp = dense_pseudoinverse(g)
    B = incidence_matrix(g)
    sw = np.sqrt(g.w)
    P = (sw[:, None] * B) @ Lp @ (B.T * sw[None, :])
    return 0.5 * (P + P.T)


def mean_zero_basis(n):
    """Orthonormal n x (n-1) basis of the complement of the ones vector."""
    ones = np.ones((n, 1)) / np.sqrt(n)
    full, _ = np.linalg.qr(np.hstack([ones, np.eye(n)[:, : n - 1]]))
    return full[:, 1:n]


def generalized_eigenvalues(g, h):
    """All eigenvalues of ``L_g x = lambda L_h x`` on the mean-zero subspace."""
    if g.n != h.n:
        raise ValueError(f"vertex sets differ: {g.n} vs {h.n}")
    _check(g)
    if g.n == 1:
        return np.ones(0)
    Q = mean_zero_basis(g.n)
    A = Q.T @ dense_laplacian(g) @ Q
    B = Q.T @ dense_laplacian(h) @ Q
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    try:
        return la.eigh(A, B, eigvals_only=True)
    except la.LinAlgError:
        # L_h singular on the subspace (h disconnected): invert the pencil
        mu = la.eigh(B, A, eigvals_only=True)
        with np.errstate(divide="ignore"):
            lam = np.where(mu > 1e-14 * max(mu[-1], 1.0), 1.0 / mu, np.inf)
        return np.sort(lam)


def sandwich_check(g, h, lower, upper, slack=1e-9):
    """Test ``lower * L_h <= L_g <= upper * L_h`` via generalized eigenvalues.

    Returns ``(ok, lam_lo, lam_hi)``.
    """
    lam = generalized_eigenvalues(g, h)
    if lam.size == 0:
        return True, 1.0, 1.0
    lo, hi = float(lam[0]), float(lam[-1])
    ok = (lower - slack <= lo) and (hi <= upper + slack)
    return ok, lo, hi


def dense_solve(g, b):
    """``L^+ b`` for the mean-projected ``b``."""
    b = np.asarray(b, dtype=np.float64)
    return dense_pseudoinverse(g) @ (b - b.mean())


def anorm(g, x):
    return float(np.sqrt(max(g.quadratic_form(x), 0.0)))
