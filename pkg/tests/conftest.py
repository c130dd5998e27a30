import numpy as np
import pytest
import scipy.sparse as sp

from sddkit.graph import WeightedGraph, generate


def random_sdd(n, rng, density=0.3, laplacian=False):
    """Random SDD matrix with mixed-sign off-diagonals and positive row excess."""
    a = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                val = rng.uniform(0.1, 2.0)
                if not laplacian and rng.random() < 0.5:
                    val = -val
                a[i, j] = a[j, i] = -val
    # keep it connected: chain the vertices
    for i in range(n - 1):
        if a[i, i + 1] == 0:
            a[i, i + 1] = a[i + 1, i] = -rng.uniform(0.1, 2.0)
    np.fill_diagonal(a, 0.0)
    excess = 0.0 if laplacian else rng.uniform(0.01, 1.0, size=n)
    np.fill_diagonal(a, np.abs(a).sum(axis=1) + excess)
    return a


def naive_tree_resistance(tree, a, b):
    """Tree-path resistance by walking both endpoints to the root."""
    g = tree.graph
    up = {}
    x, acc = a, 0.0
    while True:
        up[x] = acc
        if x == tree.root:
            break
        e = tree.parent_edge[x]
        acc += 1.0 / (tree.scale * g.w[e])
        x = int(tree.parent[x])
    y, acc = b, 0.0
    while y not in up:
        e = tree.parent_edge[y]
        acc += 1.0 / (tree.scale * g.w[e])
        y = int(tree.parent[y])
    return up[y] + acc


def small_corpus():
    out = [
        ("path8", generate("path", 8)),
        ("cycle9", generate("cycle", 9)),
        ("grid4x5", generate("grid2d", 4, 5)),
        ("complete6", generate("complete", 6, weights=(0.5, 2.0), seed=3)),
        ("star7", generate("star", 7)),
    ]
    for s in range(5):
        out.append((f"random{s}", generate("random", 30, 70, seed=s, weights=(0.1, 10.0))))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def triangle():
    # edges ab=1, bc=2, ca=4 with a=0, b=1, c=2
    return WeightedGraph(3, [0, 1, 0], [1, 2, 2], [1.0, 2.0, 4.0])


def as_csr(a):
    return sp.csr_matrix(np.asarray(a, dtype=float))


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record ``(passed, detail)`` for an acceptance criterion by test name."""
    name = request.node.name.split("_")[1].upper()

    def record(passed, detail):
        ACCEPTANCE[name] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s[1:])):
        passed, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{name} {'PASS' if passed else 'FAIL'}: {detail}")
