import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sddkit import oracle
from sddkit.elimination import (
    Degree1,
    Degree2,
    EliminationFactor,
    factor_backward,
    factor_forward,
    factor_solve,
    greedy_elimination,
)
from sddkit.graph import DisconnectedGraphError, WeightedGraph, generate

from conftest import small_corpus


def round_trip(g, c):
    red, f = greedy_elimination(g)
    return factor_solve(f, lambda cb: oracle.dense_solve(red, cb) if red.n > 1 else np.zeros(red.n), c)


def test_path_collapses():
    red, f = greedy_elimination(generate("path", 5))
    assert red.n == 1 and red.m == 0
    assert len(f) == 4 and all(isinstance(s, Degree1) for s in f.steps)


def test_series_merge():
    red, f = greedy_elimination(generate("cycle", 3))
    s = f.steps[0]
    assert isinstance(s, Degree2) and s.merged == pytest.approx(0.5)


def test_cycle4_merges():
    red, f = greedy_elimination(generate("cycle", 4))
    assert red.n == 1
    s = f.steps
    assert s[0].merged == pytest.approx(0.5)
    assert s[1].merged == pytest.approx(1.0 / 3.0)
    assert isinstance(s[2], Degree1) and s[2].w == pytest.approx(4.0 / 3.0)


def test_cycle4_schur_complements():
    g = generate("cycle", 4)
    L = oracle.dense_laplacian(g)
    _, f = greedy_elimination(g)
    alive = list(range(4))
    for s in f.steps[:-1]:
        i = alive.index(s.v)
        rest = [k for k in range(len(alive)) if k != i]
        L = L[np.ix_(rest, rest)] - np.outer(L[rest, i], L[i, rest]) / L[i, i]
        alive.pop(i)
    assert -L[0, 1] == pytest.approx(4.0 / 3.0)


def test_single_degree1_forward():
    f = greedy_elimination(generate("path", 2))[1]
    top, bottom = factor_forward(f, np.array([1.0, -1.0]))
    assert top.tolist() == [1.0] and bottom.tolist() == [0.0]


def test_empty_factor():
    f = EliminationFactor.empty(3)
    c = np.array([1.0, 2.0, -3.0])
    top, bottom = factor_forward(f, c)
    assert top.size == 0 and np.allclose(bottom, c)
    assert np.allclose(factor_backward(f, top, bottom), bottom)


def test_dimension_mismatch():
    f = greedy_elimination(generate("path", 3))[1]
    with pytest.raises(ValueError):
        factor_forward(f, np.zeros(4))
    with pytest.raises(ValueError):
        factor_backward(f, np.zeros(1), np.zeros(1))


@pytest.mark.parametrize("n", [3, 5])
def test_path_round_trip(n):
    g = generate("path", n)
    c = np.zeros(n)
    c[0], c[-1] = 1.0, -1.0
    if n == 5:
        c = np.random.default_rng(0).standard_normal(n)
        c -= c.mean()
    x = round_trip(g, c)
    ref = oracle.dense_solve(g, c)
    assert np.linalg.norm(x - ref) <= 1e-10 * np.linalg.norm(ref)


def test_star_leaves():
    g = WeightedGraph(5, [0, 0, 0, 0], [1, 2, 3, 4], [1.0, 2.0, 3.0, 4.0])
    c = np.array([0.0, 1.0, 2.0, -1.0, -2.0])
    c[0] = -c[1:].sum()
    x = round_trip(g, c)
    for leaf in range(1, 5):
        assert g.w[leaf - 1] * (x[leaf] - x[0]) == pytest.approx(c[leaf], abs=1e-12)


def test_disconnected_rejected():
    with pytest.raises(DisconnectedGraphError):
        greedy_elimination(WeightedGraph(4, [0, 2], [1, 3], [1.0, 1.0]))


def test_factor_invariants():
    for _, g in small_corpus():
        red, f = greedy_elimination(g)
        assert sorted(f.survivor_map[f.survivors].tolist()) == list(range(red.n))
        for s in f.steps:
            if isinstance(s, Degree2):
                assert s.merged == pytest.approx(s.w1 * s.w2 / (s.w1 + s.w2))
        assert len(f.pivots) + red.n == g.n


def test_no_low_degree_survivors():
    for _, g in small_corpus():
        red, _ = greedy_elimination(g)
        if red.n > 1:
            deg = np.bincount(np.r_[red.u, red.v], minlength=red.n)
            assert deg.min() >= 3


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 120), st.integers(0, 10**6), st.floats(0.0, 1.5))
def test_exact_and_size_bound(n, seed, extra):
    m = min(n * (n - 1) // 2, n - 1 + int(extra * n))
    g = generate("random", n, m, seed=seed, weights=(0.1, 10.0))
    red, f = greedy_elimination(g)
    j = g.m - g.n + 1
    if j >= 2:
        assert red.n <= 2 * j - 2 and red.m <= 3 * j - 3
    c = np.random.default_rng(seed).standard_normal(n)
    c -= c.mean()
    x = round_trip(g, c)
    ref = oracle.dense_solve(g, c)
    assert np.linalg.norm(x - ref) <= 1e-10 * max(np.linalg.norm(ref), 1e-300)


def test_determinism():
    g = generate("random", 60, 90, seed=8)
    a, fa = greedy_elimination(g)
    b, fb = greedy_elimination(g)
    assert np.array_equal(fa.pivots, fb.pivots) and a.allclose(b)
