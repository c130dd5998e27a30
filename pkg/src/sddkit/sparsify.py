"""Oversampling sparsifier and the incremental sparsifier built on it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import GraphError, WeightedGraph
from .lowstretch import SpanningTree, compute_stretch, low_stretch_tree, scaled_probabilities

__all__ = [
    "DEFAULT_CS",
    "SampleSpec",
    "SparsifyResult",
    "as_generator",
    "sample_count",
    "sample",
    "incremental_sparsify",
    "oversample_check",
]

DEFAULT_CS = 6.0
_CHUNK = 1 << 20


def as_generator(rng):
    """Accept a seed, a ``SeedSequence`` or a ``Generator``."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.Generator(np.random.PCG64(rng))


def sample_count(t, xi, cs=DEFAULT_CS):
    """``q = ceil(cs * t * ln t * ln(1/xi))``, at least 1."""
    if not 0 < xi < 1:
        raise ValueError(f"xi must lie in (0, 1), got {xi}")
    if t <= 1:
        return 1
    return max(1, math.ceil(cs * t * math.log(t) * math.log(1.0 / xi)))


@dataclass(frozen=True)
class SampleSpec:
    p_prime: np.ndarray = field(repr=False)
    t: float
    q: int
    xi: float
    cs: float

    @classmethod
    def build(cls, p_prime, xi, cs=DEFAULT_CS):
        p_prime = np.asarray(p_prime, dtype=np.float64)
        if p_prime.size == 0 or not np.all(np.isfinite(p_prime)) or np.any(p_prime < 0):
            raise ValueError("sampling weights must be finite and nonnegative")
        t = float(p_prime.sum())
        if t <= 0:
            raise ValueError("sampling weights are all zero")
        return cls(p_prime, t, sample_count(t, xi, cs), float(xi), float(cs))

    @property
    def p(self):
        return self.p_prime / self.t


def _pick(cum, total, q, rng):
    """Counts of ``q`` draws by binary search over cumulative intervals."""
    counts = np.zeros(len(cum), dtype=np.int64)
    left = q
    while left > 0:
        k = min(left, _CHUNK)
        idx = np.searchsorted(cum, rng.random(k) * total, side="right")
        np.minimum(idx, len(cum) - 1, out=idx)
        counts += np.bincount(idx, minlength=len(cum))
        left -= k
    return counts


def sample(g, p_prime, xi, rng, cs=DEFAULT_CS):
    """Draw ``q`` edges with probability ``p'_e / t``; a pick adds ``w_e / (q p_e)``.

    Repeated picks accumulate on one edge, so the output is simple.
    """
    p_prime = np.asarray(p_prime, dtype=np.float64)
    if p_prime.shape != (g.m,):
        raise ValueError(f"need one sampling weight per edge ({g.m}), got {p_prime.shape}")
    if np.any(p_prime <= 0):
        raise ValueError("sampling weights must be strictly positive")
    spec = SampleSpec.build(p_prime, xi, cs)
    counts = _pick(np.cumsum(p_prime), spec.t, spec.q, as_generator(rng))
    hit = counts > 0
    w = g.w[hit] * counts[hit] * spec.t / (spec.q * p_prime[hit])
    return WeightedGraph(g.n, g.u[hit], g.v[hit], w)


@dataclass(frozen=True)
class SparsifyResult:
    """Output of :func:`incremental_sparsify` with its sampling record."""

    graph: WeightedGraph
    tree: SpanningTree = field(repr=False)
    kappa: float
    xi: float
    mode: str
    q: int
    t: float
    t_nontree: float
    nontree_samples: int
    nontree_distinct: int
    cs: float

    @property
    def expected_nontree_samples(self):
        return self.q * self.t_nontree / self.t

    def stats(self):
        return {
            "kappa": self.kappa,
            "xi": self.xi,
            "mode": self.mode,
            "cs": self.cs,
            "q": self.q,
            "t": self.t,
            "t_nontree": self.t_nontree,
            "nontree_samples": self.nontree_samples,
            "expected_nontree_samples": self.expected_nontree_samples,
            "nontree_distinct": self.nontree_distinct,
            "tree_method": self.tree.method,
            "tree_total_stretch": self.tree.total_stretch,
            "n": self.graph.n,
            "m_in": self.tree.graph.m,
            "m_out": self.graph.m,
        }


def incremental_sparsify(g, kappa, xi, rng, mode="keep-tree", cs=DEFAULT_CS, tree=None):
    """Scale a low-stretch tree by ``kappa`` and oversample by tree stretch.

    The sampler is called with failure parameter ``xi / 2`` and the
    sampled graph is doubled on return.  In ``"keep-tree"`` mode the
    scaled tree is always kept and only the non-tree picks are random
    (their number is binomial, as in the literal process); ``"literal"``
    samples every edge.
    """
    if mode not in ("keep-tree", "literal"):
        raise ValueError(f"unknown mode {mode!r}")
    g.require_connected()
    if not 0 < xi < 1:
        raise ValueError(f"xi must lie in (0, 1), got {xi}")
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    if g.m >= 1 and kappa >= g.m:
        raise GraphError(f"kappa={kappa} must be smaller than the edge count m={g.m}")
    rng = as_generator(rng)
    if tree is None:
        tree = low_stretch_tree(g)
    table = compute_stretch(g, tree)
    p_prime = scaled_probabilities(table, kappa)
    is_tree = table.is_tree
    w_prime = np.where(is_tree, g.w * kappa, g.w)
    t = float(p_prime.sum())
    t_nontree = float(p_prime[~is_tree].sum())
    q = sample_count(t, xi / 2.0, cs)

    if mode == "literal":
        counts = _pick(np.cumsum(p_prime), t, q, rng)
        hit = counts > 0
        w = w_prime[hit] * counts[hit] * t / (q * p_prime[hit])
        x = int(counts[~is_tree].sum())
        distinct = int(np.count_nonzero(hit & ~is_tree))
        h = WeightedGraph(g.n, g.u[hit], g.v[hit], 2.0 * w)
    else:
        nt = np.flatnonzero(~is_tree)
        x = int(rng.binomial(q, t_nontree / t)) if t_nontree > 0 else 0
        counts = np.zeros(len(nt), dtype=np.int64)
        if x > 0:
            counts = _pick(np.cumsum(p_prime[nt]), t_nontree, x, rng)
        hit = nt[counts > 0]
        w_nt = w_prime[hit] * counts[counts > 0] * t / (q * p_prime[hit])
        te = np.flatnonzero(is_tree)
        ids = np.concatenate([te, hit])
        w = np.concatenate([w_prime[te], w_nt])
        distinct = len(hit)
        h = WeightedGraph(g.n, g.u[ids], g.v[ids], 2.0 * w)
    return SparsifyResult(h, tree, float(kappa), float(xi), mode, q, t, t_nontree, x, distinct, float(cs))


def oversample_check(g, p_prime, xi, trials, rng, cs=DEFAULT_CS):
    """Fraction of ``trials`` samples with ``G <= 2G' <= 3G`` (dense check)."""
    from .oracle import sandwich_check

    seeds = np.random.SeedSequence(rng if not isinstance(rng, np.random.Generator)
                                   else int(rng.integers(2**63))).spawn(trials)
    ok = 0
    for s in seeds:
        h = sample(g, p_prime, xi, s, cs)
        passed, _, _ = sandwich_check(h.scaled(2.0), g, 1.0, 3.0)
        ok += passed
    return ok / trials
