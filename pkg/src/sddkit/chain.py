"""Preconditioner chains: alternate incremental sparsification and greedy elimination."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .elimination import EliminationFactor, greedy_elimination
from .graph import WeightedGraph
from .lowstretch import low_stretch_tree
from .sparsify import incremental_sparsify

__all__ = [
    "ChainBuildError",
    "ChainConfig",
    "ChainLevel",
    "PreconditionerChain",
    "build_chain",
    "level_xi",
    "level_kappa",
    "validate_chain",
]

log = logging.getLogger(__name__)


class ChainBuildError(RuntimeError):
    pass


@dataclass
class ChainConfig:
    """Knobs for :func:`build_chain`.

    ``kappa_mode="practical"`` uses ``kappa`` at every level;
    ``"theory"`` uses ``c_kappa * log2(n_i)**4 * max(1, ln(1/p))``, capped
    below the level's edge count.  ``bounds="measured"`` calibrates each
    level's Chebyshev interval with a short Lanczos run; ``"fixed"`` uses
    the sandwich bound ``3 * kappa``.
    """

    kappa: float = 100.0
    kappa_mode: str = "practical"
    c_kappa: float = 1.0
    cs: float = 0.0005
    sparsify_mode: str = "keep-tree"
    c_r: float = 1.0
    direct_threshold: int = 64
    max_retries: int = 3
    kappa_growth: float = 2.0
    max_escalations: int = 6
    bounds: str = "measured"
    lanczos_steps: int = 200
    lower_margin: float = 2.0
    upper_margin: float = 1.05
    seed: int | None = None

    def to_dict(self):
        return asdict(self)


@dataclass
class ChainLevel:
    """One level ``A_i -> B_i -> A_{i+1}``.

    ``cond`` is the condition bound the solver uses for this level and
    ``precond_scale`` multiplies ``B_i^+`` so the preconditioned spectrum
    sits in ``[1, cond]``.  A solve of this level nested inside the level
    above runs ``inner_iterations`` Chebyshev steps.
    """

    a: WeightedGraph
    b: WeightedGraph
    factor: EliminationFactor = field(repr=False)
    kappa: float
    cond: float
    precond_scale: float
    stats: dict = field(default_factory=dict, repr=False)

    @property
    def inner_iterations(self):
        return math.ceil(1.33 * math.sqrt(self.cond))


@dataclass
class PreconditionerChain:
    levels: list
    terminal: WeightedGraph
    terminal_pinv: np.ndarray = field(repr=False)
    c_r: float = 1.0
    p: float = 0.1
    config: ChainConfig | None = None
    seed: int = 0

    @property
    def depth(self):
        return len(self.levels)

    def terminal_solve(self, b):
        b = b - b.mean()
        x = self.terminal_pinv @ b
        return x - x.mean()

    def level_stats(self):
        out = [dict(lvl.stats, cond=lvl.cond, precond_scale=lvl.precond_scale,
                    inner_iterations=lvl.inner_iterations) for lvl in self.levels]
        out.append({"level": self.depth, "n": self.terminal.n, "m": self.terminal.m, "terminal": True})
        return out


def _dense_pinv(g):
    if g.n == 1:
        return np.zeros((1, 1))
    lam, V = np.linalg.eigh(g.laplacian().toarray())
    inv = np.zeros_like(lam)
    keep = lam > 1e-10 * max(lam[-1], 0.0)
    inv[keep] = 1.0 / lam[keep]
    P = (V * inv) @ V.T
    return 0.5 * (P + P.T)


def level_xi(p, n_top, m_i):
    """Per-level failure parameter ``p / (2 log n)`` or ``p / (2 log log n)``."""
    ln = math.log2(max(n_top, 2))
    if m_i > ln:
        return p / (2.0 * max(ln, 1.0))
    return p / (2.0 * max(math.log2(max(ln, 2.0)), 1.0))


def level_kappa(cfg, n_i, m_i, p):
    if cfg.kappa_mode == "theory":
        k = cfg.c_kappa * math.log2(max(n_i, 2)) ** 4 * max(1.0, math.log(1.0 / p))
    elif cfg.kappa_mode == "practical":
        k = cfg.kappa
    else:
        raise ValueError(f"unknown kappa_mode {cfg.kappa_mode!r}")
    return max(1.0, min(k, m_i - 1.0)) if m_i > 1 else 1.0


def build_chain(a, p=0.1, cfg=None, seed=None):
    """Build ``A_1, B_1, A_2, ..., A_d`` down to ``cfg.direct_threshold`` edges.

    A level is accepted when ``m_i / m_{i+1} >= c_r * sqrt(3 kappa)``.  A
    rejected level is redrawn with fresh randomness up to
    ``cfg.max_retries`` times, then ``kappa`` grows by
    ``cfg.kappa_growth``.  Randomness for level ``i``, escalation ``k`` and
    retry ``r`` comes from ``SeedSequence(seed, spawn_key=(i, k, r))``.
    """
    cfg = ChainConfig() if cfg is None else cfg
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    a.require_connected()
    if seed is None:
        seed = cfg.seed
    if seed is None:
        seed = int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> 1)
    seed = int(seed)
    levels = []
    A = a
    n_top = a.n
    while A.m > cfg.direct_threshold:
        i = len(levels)
        xi = level_xi(p, n_top, A.m)
        kappa = level_kappa(cfg, A.n, A.m, p)
        tree = low_stretch_tree(A)
        accepted = None
        attempts = []
        for esc in range(cfg.max_escalations + 1):
            target = cfg.c_r * math.sqrt(3.0 * kappa)
            for retry in range(cfg.max_retries + 1):
                ss = np.random.SeedSequence(seed, spawn_key=(i, esc, retry))
                res = incremental_sparsify(A, kappa, xi, ss, cfg.sparsify_mode, cfg.cs, tree=tree)
                nxt, factor = greedy_elimination(res.graph)
                ratio = A.m / nxt.m if nxt.m else math.inf
                attempts.append((esc, retry, kappa, ratio))
                if ratio >= target and nxt.m < A.m:
                    accepted = (esc, retry, res, nxt, factor, ratio, target)
                    break
            if accepted:
                break
            if kappa >= A.m - 1:
                break
            kappa = min(kappa * cfg.kappa_growth, A.m - 1.0)
        if accepted is None:
            raise ChainBuildError(
                f"level {i} (n={A.n}, m={A.m}): reduction target never met; "
                f"attempts (escalation, retry, kappa, ratio) = {attempts}"
            )
        esc, retry, res, nxt, factor, ratio, target = accepted
        stats = {
            "level": i,
            "n": A.n,
            "m": A.m,
            "kappa": kappa,
            "xi": xi,
            "q": res.q,
            "t": res.t,
            "t_nontree": res.t_nontree,
            "nontree_samples": res.nontree_samples,
            "nontree_distinct": res.nontree_distinct,
            "b_m": res.graph.m,
            "next_n": nxt.n,
            "next_m": nxt.m,
            "ratio": ratio,
            "ratio_target": target,
            "retries": retry,
            "escalations": esc,
            "attempts": len(attempts),
            "spawn_key": [i, esc, retry],
            "tree_method": tree.method,
            "tree_total_stretch": tree.total_stretch,
        }
        log.debug("chain level %d: %s", i, stats)
        cond = 3.0 * kappa
        levels.append(ChainLevel(A, res.graph, factor, kappa, cond, cond, stats))
        A = nxt
    chain = PreconditionerChain(levels, A, _dense_pinv(A), cfg.c_r, p, cfg, seed)
    if cfg.bounds == "measured" and levels:
        from .solver import calibrate_chain

        calibrate_chain(chain, cfg.lanczos_steps, cfg.lower_margin, cfg.upper_margin, seed)
    elif cfg.bounds not in ("measured", "fixed"):
        raise ValueError(f"unknown bounds policy {cfg.bounds!r}")
    return chain


def validate_chain(chain, oracle_limit=None):
    """Check reduction ratios, factor consistency and (small levels) the spectrum.

    For levels with at most ``oracle_limit`` vertices the report holds the
    generalized eigenvalues of ``(B_i, A_i)``, whether ``A_i <= B_i <=
    3 kappa_i A_i`` holds (``sandwich_ok``) and whether the scaled spectrum
    lies in the level's Chebyshev interval ``[1, cond]`` (``interval_ok``).
    A level passes on ``interval_ok`` for measured-bound chains and on
    ``sandwich_ok`` otherwise.  Failures are recorded, never raised.
    """
    from . import oracle
    from .elimination import greedy_elimination as _ge

    limit = oracle.oracle_limit() if oracle_limit is None else oracle_limit
    measured = chain.config is not None and chain.config.bounds == "measured"
    report = {"levels": [], "ok": True, "bounds": "measured" if measured else "fixed"}
    for i, lvl in enumerate(chain.levels):
        nxt = chain.levels[i + 1].a if i + 1 < chain.depth else chain.terminal
        m_next = nxt.m
        target = chain.c_r * math.sqrt(3.0 * lvl.kappa)
        ratio = lvl.a.m / m_next if m_next else math.inf
        entry = {
            "level": i,
            "n": lvl.a.n,
            "m": lvl.a.m,
            "kappa": lvl.kappa,
            "ratio": ratio,
            "ratio_target": target,
            "ratio_ok": ratio >= target,
        }
        reduced, _ = _ge(lvl.b)
        entry["factor_ok"] = bool(reduced.n == nxt.n and reduced.allclose(nxt, rtol=1e-12))
        entry["factor_ok"] &= lvl.factor.n == lvl.b.n and lvl.factor.n_reduced == nxt.n
        if lvl.a.n <= limit:
            ok, lo, hi = oracle.sandwich_check(lvl.b, lvl.a, 1.0, 3.0 * lvl.kappa)
            # B x = lam A x maps to eigenvalue scale / lam of the scaled B^+ A
            s_lo, s_hi = lvl.precond_scale / hi, lvl.precond_scale / lo
            entry.update(sandwich_ok=ok, lambda_min=lo, lambda_max=hi,
                         measured_condition=hi / lo if lo > 0 else math.inf,
                         interval_ok=bool(s_lo >= 1.0 - 1e-9 and s_hi <= lvl.cond * (1 + 1e-9)))
        else:
            entry["sandwich_ok"] = entry["interval_ok"] = None
        # measured-bound chains are checked against their calibrated interval
        spectral = entry["interval_ok"] if measured else entry["sandwich_ok"]
        passed = entry["ratio_ok"] and entry["factor_ok"] and spectral is not False
        entry["ok"] = passed
        report["ok"] &= passed
        report["levels"].append(entry)
    return report
