"""Preconditioned Chebyshev, the recursive chain solve, and the top-level solver."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse.linalg as spla

from . import _kernels
from .chain import ChainConfig, build_chain
from .elimination import _backward, _forward
from .graph import SddMatrix, project_mean_zero, sdd_to_laplacian

__all__ = [
    "LOWER",
    "UPPER",
    "ChebyshevParams",
    "SolveConfig",
    "SolveReport",
    "SolverDivergedError",
    "p_chebyshev",
    "r_p_chebyshev",
    "ChainSolver",
    "calibrate_chain",
    "exact_preconditioner",
    "lanczos_bounds",
    "solve",
]

LOWER = 1.0 - 2.0 * math.exp(-2.0)
UPPER = 1.0 + 2.0 * math.exp(-2.0)


class SolverDivergedError(FloatingPointError):
    pass


@dataclass(frozen=True)
class ChebyshevParams:
    lambda_min: float
    lambda_max: float
    t: int = 1

    def __post_init__(self):
        if not (0 < self.lambda_min <= self.lambda_max) or not math.isfinite(self.lambda_max):
            raise ValueError(f"need 0 < lambda_min <= lambda_max, got {self.lambda_min}, {self.lambda_max}")
        if self.t < 1:
            raise ValueError(f"t must be >= 1, got {self.t}")

    @property
    def d(self):
        return (self.lambda_max + self.lambda_min) / 2.0

    @property
    def c(self):
        return (self.lambda_max - self.lambda_min) / 2.0


def p_chebyshev(apply_a, b, params, precond, callback=None):
    """Preconditioned Chebyshev iteration from ``x = 0``.

    Runs ``params.t`` iterations of the search-direction recurrence with
    the residual recomputed as ``b - A x`` each step.  ``callback(i, x, r)``
    is called after iteration ``i``; a true return value stops early.

    Parameters
    ----------
    apply_a, precond : callable
        ``v -> A v`` and ``r -> approx B^+ r``.
    b : ndarray
        Right-hand side, projected to mean zero on entry.
    params : ChebyshevParams

    Returns
    -------
    ndarray
    """
    b = np.asarray(b, dtype=np.float64)
    b = b - b.mean()
    d, c = params.d, params.c
    x = np.zeros_like(b)
    r = b.copy()
    s = None
    alpha = 0.0
    for i in range(1, params.t + 1):
        z = precond(r)
        if i == 1:
            s = z.copy()
            alpha = 1.0 / d
        else:
            beta = 0.5 * (c * alpha) ** 2 if i == 2 else (c * alpha / 2.0) ** 2
            alpha = 1.0 / (d - beta / alpha)
            s = z + beta * s
        x += alpha * s
        x -= x.mean()
        r = b - apply_a(x)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(x))):
            raise SolverDivergedError(f"non-finite values at Chebyshev iteration {i}")
        if callback is not None and callback(i, x, r):
            break
    return x


class ChainSolver:
    """Recursive solve over a :class:`PreconditionerChain` with call accounting.

    ``calls[i]`` counts solves started at level ``i`` and ``iterations[i]``
    the Chebyshev iterations run there.  Level ``depth`` is the dense
    terminal.  The level a solve starts at runs in Python (so a callback
    can watch it); everything below runs in one compiled recursion over
    the packed chain.
    """

    def __init__(self, chain):
        self.chain = chain
        self.ops = [lvl.a.laplacian() for lvl in chain.levels]
        self._pack()
        self.reset()

    def _pack(self):
        ch = self.chain
        graphs = [lvl.a for lvl in ch.levels] + [ch.terminal]
        laps = self.ops + [ch.terminal.laplacian()]
        nv = np.array([g.n for g in graphs], dtype=np.int64)
        ip_off = np.zeros(len(graphs) + 1, dtype=np.int64)
        nz_off = np.zeros(len(graphs) + 1, dtype=np.int64)
        ip_off[1:] = np.cumsum([g.n + 1 for g in graphs])
        nz_off[1:] = np.cumsum([L.nnz for L in laps])
        facs = [lvl.factor for lvl in ch.levels]
        pv_off = np.zeros(len(graphs) + 1, dtype=np.int64)
        sv_off = np.zeros(len(graphs) + 1, dtype=np.int64)
        pv_off[1:len(facs) + 1] = np.cumsum([len(f.pivots) for f in facs])
        pv_off[len(facs) + 1:] = pv_off[len(facs)]
        sv_off[1:len(facs) + 1] = np.cumsum([len(f.survivors) for f in facs])
        sv_off[len(facs) + 1:] = sv_off[len(facs)]

        def cat(parts, dtype):
            return np.ascontiguousarray(np.concatenate(parts) if parts else np.zeros(0), dtype=dtype)

        i64, f64 = np.int64, np.float64
        self._packed = (
            nv, ip_off, nz_off,
            cat([L.indptr for L in laps], i64),
            cat([L.indices for L in laps], i64),
            cat([L.data for L in laps], f64),
            pv_off,
            cat([f.pivots for f in facs], i64),
            cat([f.u1 for f in facs], i64),
            cat([f.u2 for f in facs], i64),
            cat([f.a1 for f in facs], f64),
            cat([f.a2 for f in facs], f64),
            cat([f.dinv for f in facs], f64),
            sv_off,
            cat([f.survivors for f in facs], i64),
        )
        self._term = np.ascontiguousarray(ch.terminal_pinv, dtype=f64)

    def _scalars(self):
        lv = self.chain.levels
        scale = np.array([x.precond_scale for x in lv] + [1.0])
        lmin = np.full(len(lv) + 1, LOWER)
        lmax = np.array([UPPER * x.cond for x in lv] + [1.0])
        t_in = np.array([x.inner_iterations for x in lv] + [1], dtype=np.int64)
        return scale, lmin, lmax, t_in

    def reset(self):
        k = self.chain.depth + 1
        self._calls = np.zeros(k, dtype=np.int64)
        self._iters = np.zeros(k, dtype=np.int64)

    @property
    def calls(self):
        return self._calls.tolist()

    @property
    def iterations(self):
        return self._iters.tolist()

    def _kernel_solve(self, i, b, t):
        scale, lmin, lmax, t_in = self._scalars()
        return _kernels.chain_solve(i, np.ascontiguousarray(b, dtype=np.float64), int(t),
                                    self.chain.depth, *self._packed, scale, lmin, lmax, t_in,
                                    self._term, self._calls, self._iters)

    def preconditioner(self, i):
        lvl = self.chain.levels[i]
        f = lvl.factor
        scale = lvl.precond_scale
        below = i + 1
        t_inner = self.chain.levels[below].inner_iterations if below < self.chain.depth else 1

        def apply(z):
            z = z - z.mean()
            c_top, c_bottom = _forward(f, z)
            y = self._kernel_solve(below, c_bottom, t_inner)
            x = _backward(f, c_top, y)
            x -= x.mean()
            return scale * x

        return apply

    def params(self, i, t):
        return ChebyshevParams(LOWER, UPPER * self.chain.levels[i].cond, t)

    def solve(self, i, b, t, callback=None):
        b = np.asarray(b, dtype=np.float64)
        b = b - b.mean()
        if i == self.chain.depth:
            self._calls[i] += 1
            return self.chain.terminal_solve(b)
        self._calls[i] += 1
        op = self.ops[i]
        counter = self._iters

        def cb(k, x, r):
            counter[i] += 1
            return callback(k, x, r) if callback is not None else False

        return p_chebyshev(op.dot, b, self.params(i, t), self.preconditioner(i), cb)


def r_p_chebyshev(chain, level, b, t):
    """Solve ``A_level x = b`` approximately with ``t`` outer iterations."""
    return ChainSolver(chain).solve(level, np.asarray(b, dtype=np.float64), t)


def lanczos_bounds(apply_a, precond, n, steps, rng):
    """Extreme eigenvalues of ``precond . A`` from ``steps`` PCG-Lanczos steps.

    Starts from a random mean-zero vector.  Returns ``(lo, hi)``.
    """
    b = rng.standard_normal(n)
    b -= b.mean()
    x = np.zeros(n)
    r = b.copy()
    z = precond(r)
    p = z.copy()
    rz = float(r @ z)
    alphas, betas = [], []
    rz0 = rz
    for _ in range(steps):
        ap = apply_a(p)
        pap = float(p @ ap)
        if pap <= 0 or rz <= 0:
            break
        a = rz / pap
        x += a * p
        r -= a * ap
        z = precond(r)
        rz_new = float(r @ z)
        alphas.append(a)
        if rz_new <= 1e-28 * rz0:
            break
        beta = rz_new / rz
        betas.append(beta)
        p = z + beta * p
        rz = rz_new
    k = len(alphas)
    if k == 0:
        return 1.0, 1.0
    diag = np.empty(k)
    off = np.empty(max(k - 1, 0))
    diag[0] = 1.0 / alphas[0]
    for j in range(1, k):
        diag[j] = 1.0 / alphas[j] + betas[j - 1] / alphas[j - 1]
        off[j - 1] = math.sqrt(betas[j - 1]) / alphas[j - 1]
    ev = la.eigvalsh_tridiagonal(diag, off) if k > 1 else diag
    return float(ev[0]), float(ev[-1])


def exact_preconditioner(chain, i):
    """``z -> B_i^+ z`` exactly: factor substitution around a sparse LU of ``A_{i+1}``."""
    f = chain.levels[i].factor
    nxt = chain.levels[i + 1].a if i + 1 < chain.depth else chain.terminal
    if nxt.n > 1:
        lu = spla.splu(nxt.laplacian().tocsc()[1:, 1:])

    def apply(z):
        z = z - z.mean()
        c_top, c_bottom = _forward(f, z)
        y = np.zeros(len(c_bottom))
        if len(c_bottom) > 1:
            y[1:] = lu.solve(c_bottom[1:] - c_bottom.mean())
        x = _backward(f, c_top, y)
        return x - x.mean()

    return apply


def calibrate_chain(chain, steps=200, lower_margin=2.0, upper_margin=1.05, seed=0):
    """Measure each level's pencil ``(A_i, B_i)`` and set its Chebyshev interval.

    Lanczos runs on ``B_i^+ A_i`` with an exact ``B_i`` solve, so levels
    are independent.  The estimated bottom ``lo / lower_margin`` is mapped
    to 1 through ``precond_scale`` and ``cond`` becomes the ratio of the
    widened estimates.  Lanczos finds the top of the spectrum quickly but
    overestimates the bottom when a few small outlying eigenvalues exist,
    hence the asymmetric margins.  The fixed ``LOWER``/``UPPER`` factors
    still cover the error of the inexact inner solves.
    """
    for i, lvl in enumerate(chain.levels):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1 << 20, i)))
        op = lvl.a.laplacian()
        lo, hi = lanczos_bounds(op.dot, exact_preconditioner(chain, i), lvl.a.n, steps, rng)
        lo_b = lo / lower_margin
        hi_b = hi * upper_margin
        lvl.precond_scale = 1.0 / lo_b
        lvl.cond = max(hi_b / lo_b, 1.0)
        lvl.stats["measured_lambda"] = [lo, hi]
    return chain


@dataclass
class SolveConfig(ChainConfig):
    """Chain knobs plus outer-loop settings.

    The outer loop stops once ``||b - L x|| / ||b|| <= residual_target(eps)``
    or after ``ceil(c_t * sqrt(cond_1) * ln(2 / eps))`` iterations.
    """

    c_t: float = 2.0
    residual_factor: float = 0.01
    oracle_limit: int | None = None

    def residual_target(self, eps):
        return self.residual_factor * eps


@dataclass
class SolveReport:
    n: int
    m: int
    eps: float
    p: float
    seed: int
    levels: list
    iterations: int
    iteration_cap: int
    level_calls: list
    level_iterations: list
    residuals: list
    relative_residual: float
    residual_target: float
    converged: bool
    reduction: str
    wallclock_ms: dict
    warnings: list
    config: dict
    anorm_error: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self, wallclock=True):
        d = asdict(self)
        if not wallclock:
            d.pop("wallclock_ms")
        if d["anorm_error"] is None:
            d.pop("anorm_error")
        return _jsonable(d)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _oracle_anorm_error(a, red, x, b):
    """Relative ``A``-norm error of ``x`` against a dense solve of the input system."""
    if red.kind == "identity":
        A = a.matrix.toarray()
        lam, V = np.linalg.eigh(A)
        keep = lam > 1e-10 * lam[-1]
        bb = b - b.mean()
        xs = V[:, keep] @ ((V[:, keep].T @ bb) / lam[keep])
        e = x - xs
        e -= e.mean()
    else:
        A = a.matrix.toarray()
        xs = np.linalg.solve(A, b)
        e = x - xs
    num = math.sqrt(max(float(e @ A @ e), 0.0))
    den = math.sqrt(max(float(xs @ A @ xs), 0.0))
    return num / den if den > 0 else num


def solve(a, b, eps=1e-6, p=0.1, cfg=None, seed=None):
    """Solve ``A x = b`` for an SDD matrix ``A``.

    Parameters
    ----------
    a : SddMatrix, WeightedGraph or sparse matrix
    b : array_like
    eps : float
        Target relative ``A``-norm error.
    p : float
        Chain failure probability budget.
    cfg : SolveConfig, optional
    seed : int, optional
        Overrides ``cfg.seed``.  The resolved seed is in the report.

    Returns
    -------
    x : ndarray
    report : SolveReport
    """
    from . import oracle
    from .graph import WeightedGraph

    cfg = SolveConfig() if cfg is None else cfg
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if isinstance(a, WeightedGraph):
        a = SddMatrix(a.laplacian())
    elif not isinstance(a, SddMatrix):
        a = SddMatrix(a)
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (a.n,):
        raise ValueError(f"right-hand side has shape {b.shape}, matrix is {a.n} x {a.n}")
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side has non-finite entries")
    seed = cfg.seed if seed is None else seed
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> 1)
    seed = int(seed)
    notes = []
    t0 = time.perf_counter()

    g, bhat, red = sdd_to_laplacian(a, b)
    g.require_connected()
    bhat, msg = project_mean_zero(bhat, "right-hand side", warn=False)
    if msg:
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    t1 = time.perf_counter()
    chain = build_chain(g, p, cfg, seed)
    t2 = time.perf_counter()

    cs = ChainSolver(chain)
    bnorm = float(np.linalg.norm(bhat))
    target = cfg.residual_target(eps)
    residuals = []
    if chain.depth == 0:
        cap = 1
        xhat = chain.terminal_solve(bhat)
        r = bhat - g.laplacian() @ xhat
        residuals.append(float(np.linalg.norm(r)))
        iterations = 1
    elif bnorm == 0:
        cap = 0
        xhat = np.zeros(g.n)
        iterations = 0
    else:
        cond1 = chain.levels[0].cond
        cap = max(1, math.ceil(cfg.c_t * math.sqrt(cond1) * math.log(2.0 / eps)))

        def monitor(i, x, r):
            residuals.append(float(np.linalg.norm(r)))
            return residuals[-1] <= target * bnorm

        xhat = cs.solve(0, bhat, cap, monitor)
        iterations = len(residuals)
    t3 = time.perf_counter()

    x = red.backward(xhat)
    relres = residuals[-1] / bnorm if residuals and bnorm > 0 else 0.0
    converged = relres <= target
    if not converged:
        msg = (f"iteration cap {cap} reached with relative residual {relres:.3e} "
               f"above target {target:.3e}")
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    anorm_error = None
    limit = oracle.oracle_limit() if cfg.oracle_limit is None else cfg.oracle_limit
    if a.n <= limit:
        anorm_error = _oracle_anorm_error(a, red, x, b if red.kind != "identity" else bhat)
    t4 = time.perf_counter()

    cfg_dict = asdict(cfg)
    cfg_dict["seed"] = seed
    report = SolveReport(
        n=a.n,
        m=g.m,
        eps=eps,
        p=p,
        seed=seed,
        levels=chain.level_stats(),
        iterations=iterations,
        iteration_cap=cap,
        level_calls=list(cs.calls),
        level_iterations=list(cs.iterations),
        residuals=residuals,
        relative_residual=relres,
        residual_target=target,
        converged=converged,
        reduction=red.kind,
        wallclock_ms={
            "reduce": 1e3 * (t1 - t0),
            "build": 1e3 * (t2 - t1),
            "solve": 1e3 * (t3 - t2),
            "oracle": 1e3 * (t4 - t3),
            "total": 1e3 * (t4 - t0),
        },
        warnings=notes,
        config=cfg_dict,
        anorm_error=anorm_error,
    )
    return x, report
