import math

import numpy as np
import pytest

from sddkit import oracle
from sddkit.chain import (
    ChainBuildError,
    ChainConfig,
    build_chain,
    level_kappa,
    level_xi,
    validate_chain,
)
from sddkit.graph import WeightedGraph, generate
from sddkit.sparsify import DEFAULT_CS


def test_level_xi_branches():
    assert level_xi(0.1, 1024, 5000) == pytest.approx(0.1 / 20.0)
    # few edges left: log log branch
    assert level_xi(0.1, 1024, 8) == pytest.approx(0.1 / (2.0 * math.log2(10.0)))
    assert 0 < level_xi(0.5, 2, 1) < 1


def test_level_kappa_modes():
    assert level_kappa(ChainConfig(kappa=20.0), 100, 500, 0.1) == 20.0
    assert level_kappa(ChainConfig(kappa=20.0), 100, 10, 0.1) == 9.0
    th = ChainConfig(kappa_mode="theory", c_kappa=1e-3)
    assert level_kappa(th, 256, 10**6, 0.1) == pytest.approx(1e-3 * 8**4 * math.log(10.0))
    with pytest.raises(ValueError):
        level_kappa(ChainConfig(kappa_mode="other"), 10, 100, 0.1)


def test_path_depth_one():
    g = generate("path", 1000)
    chain = build_chain(g, 0.1, ChainConfig(kappa=20.0, bounds="fixed"), seed=0)
    assert chain.depth == 1
    lvl = chain.levels[0]
    assert lvl.b.allclose(g.scaled(2.0 * lvl.kappa))
    assert chain.terminal.n == 1
    assert validate_chain(chain)["ok"]


def test_small_input_is_terminal():
    chain = build_chain(generate("cycle", 30), 0.1, seed=0)
    assert chain.depth == 0 and chain.terminal.m == 30


def test_grid40_ratios():
    g = generate("grid2d", 40, 40)
    for seed in range(3):
        chain = build_chain(g, 0.1, seed=seed)
        rep = validate_chain(chain, oracle_limit=0)
        assert all(e["ratio_ok"] and e["factor_ok"] for e in rep["levels"])
        ms = [lvl.a.m for lvl in chain.levels] + [chain.terminal.m]
        assert all(x > y for x, y in zip(ms, ms[1:]))
        assert chain.terminal.m <= chain.config.direct_threshold
        if all(e["ratio_target"] >= 2 for e in rep["levels"]):
            assert sum(ms) <= 2 * ms[0]


def test_grid12_sandwich_faithful():
    # full-strength sampling keeps almost every edge, so the ratio test is off
    cfg = ChainConfig(kappa=8.0, cs=DEFAULT_CS, c_r=0.0, bounds="fixed", direct_threshold=16)
    chain = build_chain(generate("grid2d", 12, 12), 0.1, cfg, seed=1)
    rep = validate_chain(chain, oracle_limit=400)
    assert rep["levels"]
    for e in rep["levels"]:
        assert e["sandwich_ok"] and e["lambda_min"] >= 1 - 1e-9
        assert e["lambda_max"] <= 3 * e["kappa"] + 1e-9


def test_sandwich_violation_detected():
    chain = build_chain(generate("grid2d", 12, 12), 0.1, ChainConfig(bounds="fixed"), seed=0)
    lvl = chain.levels[0]
    lvl.b = lvl.a.scaled(0.5)
    e = validate_chain(chain, oracle_limit=400)["levels"][0]
    assert not e["sandwich_ok"]
    assert e["lambda_min"] == pytest.approx(0.5)


def test_determinism_and_stats():
    g = generate("grid2d", 25, 25)
    a = build_chain(g, 0.1, seed=7)
    b = build_chain(g, 0.1, seed=7)
    assert a.depth == b.depth
    for x, y in zip(a.levels, b.levels):
        assert x.b.allclose(y.b, rtol=0) and x.cond == y.cond
    st = a.level_stats()
    assert st[-1]["terminal"]
    for s in st[:-1]:
        assert {"n", "m", "kappa", "q", "retries", "ratio", "spawn_key"} <= set(s)


def test_failure_raises():
    g = generate("complete", 20)
    cfg = ChainConfig(cs=DEFAULT_CS, max_retries=0, max_escalations=1, bounds="fixed")
    with pytest.raises(ChainBuildError):
        build_chain(g, 0.1, cfg, seed=0)


def test_bad_arguments():
    with pytest.raises(ValueError):
        build_chain(generate("path", 4), 1.5)
    with pytest.raises(ValueError):
        build_chain(generate("grid2d", 10, 10), 0.1, ChainConfig(bounds="other"), seed=0)


def test_measured_bounds_cover_spectrum():
    g = generate("grid2d", 15, 15)
    chain = build_chain(g, 0.1, seed=3)
    for i, lvl in enumerate(chain.levels):
        lam = oracle.generalized_eigenvalues(lvl.a, lvl.b)
        s = lvl.precond_scale * lam
        assert s.min() >= 1.0 - 1e-9
        assert s.max() <= lvl.cond * (1 + 1e-9)
