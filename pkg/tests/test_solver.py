import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from sddkit import oracle
from sddkit.chain import ChainConfig, build_chain
from sddkit.graph import SddMatrix, WeightedGraph, generate
from sddkit.solver import (
    LOWER,
    UPPER,
    ChainSolver,
    ChebyshevParams,
    SolveConfig,
    SolverDivergedError,
    exact_preconditioner,
    p_chebyshev,
    r_p_chebyshev,
    solve,
)

from conftest import random_sdd


def rhs(n, seed):
    b = np.random.default_rng(seed).standard_normal(n)
    return b - b.mean()


def anorm_err(g, x, b):
    ref = oracle.dense_solve(g, b)
    return oracle.anorm(g, x - ref) / oracle.anorm(g, ref)


def test_params():
    p = ChebyshevParams(1.0, 3.0, 4)
    assert (p.d, p.c) == (2.0, 1.0)
    ChebyshevParams(1.0, 1.0)
    for bad in ((0.0, 1.0, 1), (2.0, 1.0, 1), (1.0, 2.0, 0), (1.0, np.inf, 1)):
        with pytest.raises(ValueError):
            ChebyshevParams(*bad)
    assert LOWER == pytest.approx(1 - 2 * math.exp(-2)) and UPPER == pytest.approx(1 + 2 * math.exp(-2))


def test_exact_preconditioner_one_step():
    g = generate("random", 40, 100, seed=1, weights=(0.1, 10.0))
    Lp = oracle.dense_pseudoinverse(g)
    b = rhs(g.n, 0)
    b -= b.mean()
    x = p_chebyshev(g.laplacian().dot, b, ChebyshevParams(1.0, 1.0, 1), lambda z: Lp @ z)
    assert np.linalg.norm(x - Lp @ b) <= 1e-12 * np.linalg.norm(Lp @ b)


def test_path2_closed_form():
    g = generate("path", 2)
    Lp = oracle.dense_pseudoinverse(g)
    x = p_chebyshev(g.laplacian().dot, np.array([1.0, -1.0]), ChebyshevParams(1.0, 1.0), lambda z: Lp @ z)
    assert np.allclose(x, [0.5, -0.5], atol=1e-15)


def test_chebyshev_bound_cycle_path():
    n = 50
    a = generate("cycle", n)
    bgr = a.subgraph([e for e in range(a.m) if e != a.edge_index(0, n - 1)])
    lam = oracle.generalized_eigenvalues(a, bgr)
    lo, hi = lam[0], lam[-1]
    Bp = oracle.dense_pseudoinverse(bgr)
    b = np.random.default_rng(4).standard_normal(n)
    b -= b.mean()
    ref = oracle.dense_solve(a, b)
    e0 = oracle.anorm(a, ref)
    rho = (math.sqrt(hi / lo) - 1) / (math.sqrt(hi / lo) + 1)
    errs = []
    p_chebyshev(a.laplacian().dot, b, ChebyshevParams(lo, hi, 50), lambda z: Bp @ z,
                lambda i, x, r: errs.append(oracle.anorm(a, x - ref)))
    assert len(errs) == 50
    for t, e in enumerate(errs, 1):
        assert e <= 2 * rho**t * e0 * (1 + 1e-6)


def test_divergence_reported():
    g = generate("path", 3)
    with pytest.raises(SolverDivergedError):
        p_chebyshev(g.laplacian().dot, np.array([1.0, 0.0, -1.0]), ChebyshevParams(1.0, 2.0, 3),
                    lambda z: z * np.nan)


def test_callback_stops_early():
    g = generate("path", 6)
    seen = []
    p_chebyshev(g.laplacian().dot, np.arange(6.0), ChebyshevParams(0.1, 5.0, 40), lambda z: z,
                lambda i, x, r: seen.append(i) or i == 3)
    assert seen == [1, 2, 3]


def test_terminal_level_is_exact():
    g = generate("grid2d", 6, 6)
    chain = build_chain(g, 0.1, seed=0)
    assert chain.depth == 0
    b = rhs(g.n, 1)
    cs = ChainSolver(chain)
    x = cs.solve(0, b, 5)
    assert anorm_err(g, x, b) <= 1e-12 and cs.iterations == [0]


def test_tree_chain_converges():
    g = generate("path", 300, weights=(0.5, 2.0), seed=2)
    chain = build_chain(g, 0.1, seed=0)
    assert chain.depth == 1
    b = rhs(g.n, 2)
    t = math.ceil(1.33 * math.sqrt(chain.levels[0].cond) * math.log(2e8))
    x = r_p_chebyshev(chain, 0, b, t)
    assert anorm_err(g, x, b) <= 1e-8


def test_exact_level_preconditioner():
    g = generate("grid2d", 14, 14)
    chain = build_chain(g, 0.1, seed=0)
    pre = exact_preconditioner(chain, 0)
    z = rhs(g.n, 0)
    z -= z.mean()
    x = pre(z)
    ref = oracle.dense_solve(chain.levels[0].b, z)
    assert np.linalg.norm(x - ref) <= 1e-9 * np.linalg.norm(ref)


def test_invocation_counts():
    g = generate("grid2d", 40, 40)
    chain = build_chain(g, 0.1, ChainConfig(kappa=20.0, cs=0.002), seed=0)
    assert chain.depth >= 2
    cs = ChainSolver(chain)
    cs.solve(0, rhs(g.n, 0), 7)
    it, calls = cs.iterations, cs.calls
    assert it[0] == 7 and calls[0] == 1
    for i in range(chain.depth):
        assert calls[i + 1] == it[i]
        if i + 1 < chain.depth:
            assert it[i + 1] == it[i] * chain.levels[i + 1].inner_iterations


def test_grid12_accuracy():
    g = generate("grid2d", 12, 12)
    b = rhs(g.n, 5)
    x, rep = solve(g, b, 1e-8, seed=0)
    assert rep.converged and rep.anorm_error <= 1e-8
    assert anorm_err(g, x, b) <= 1e-8


def test_path10():
    g = generate("path", 10)
    b = np.zeros(10)
    b[0], b[9] = 1.0, -1.0
    x, rep = solve(g, b, 1e-8, seed=0)
    assert anorm_err(g, x, b) <= 1e-8


def test_all_ones_warns():
    g = generate("grid2d", 5, 5)
    with pytest.warns(RuntimeWarning):
        x, rep = solve(g, np.ones(g.n), 1e-6, seed=0)
    assert rep.warnings and np.allclose(x, 0.0)


def test_sdd_2x2():
    a = SddMatrix(sp.csr_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]])))
    x, rep = solve(a, np.array([1.0, 0.0]), 1e-10, seed=0)
    assert rep.reduction == "double-cover"
    assert np.allclose(x, [2 / 3, 1 / 3], atol=1e-9)


def test_sdd_mixed_signs():
    rng = np.random.default_rng(9)
    for _ in range(5):
        a = random_sdd(30, rng)
        b = rng.standard_normal(30)
        x, _ = solve(SddMatrix(sp.csr_matrix(a)), b, 1e-10, seed=1)
        ref = np.linalg.solve(a, b)
        assert np.linalg.norm(x - ref) <= 1e-8 * np.linalg.norm(ref)


def test_residual_window_monotone():
    g = generate("grid2d", 50, 50)
    b = rhs(g.n, 0)
    _, rep = solve(g, b, 1e-6, seed=0)
    r = np.array(rep.residuals)
    assert np.all(np.isfinite(r))
    best = np.minimum.accumulate(r)
    for k in range(0, len(r) - 10, 10):
        assert best[k + 10] <= best[k]
    assert best[-1] < r[0]


def test_determinism():
    g = generate("grid2d", 30, 30)
    b = rhs(g.n, 1)
    x1, r1 = solve(g, b, 1e-6, seed=4)
    x2, r2 = solve(g, b, 1e-6, seed=4)
    assert np.array_equal(x1, x2)
    assert r1.to_dict(wallclock=False) == r2.to_dict(wallclock=False)


def test_report_fields():
    g = generate("grid2d", 20, 20)
    _, rep = solve(g, rhs(g.n, 0), 1e-6, seed=0)
    d = rep.to_dict()
    for k in ("n", "m", "eps", "levels", "iterations", "residuals", "relative_residual",
              "anorm_error", "wallclock_ms", "warnings", "seed", "config"):
        assert k in d
    assert len(d["residuals"]) == d["iterations"]
    assert d["config"]["seed"] == 0


def test_bad_inputs():
    g = generate("path", 4)
    with pytest.raises(ValueError):
        solve(g, np.zeros(3))
    with pytest.raises(ValueError):
        solve(g, np.zeros(4), eps=2.0)
    with pytest.raises(ValueError):
        solve(g, np.array([1.0, np.nan, 0.0, 0.0]))
