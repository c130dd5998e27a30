"""
Greedy elimination
==================

Degree-1 vertices are removed and degree-2 vertices spliced out (series
resistors).  The pivots form a partial Cholesky factor, so solving on the
big graph costs one solve on the reduced graph plus O(n) substitution.
"""

import numpy as np

from sddkit import factor_solve, generate, greedy_elimination, oracle

# Trees and cycles collapse completely
for name, args in [("path", (6,)), ("cycle", (4,))]:
    red, f = greedy_elimination(generate(name, *args))
    print(name, "->", red, [type(s).__name__ for s in f.steps])

red, f = greedy_elimination(generate("cycle", 4))
print("cycle(4) merged weights:", [round(s.merged if hasattr(s, "merged") else s.w, 4) for s in f.steps])

# A tree plus j extra edges leaves at most 2j-2 vertices and 3j-3 edges
g = generate("random", 2000, 2000 + 49, seed=3)
red, f = greedy_elimination(g)
j = g.m - g.n + 1
print(f"j={j}: reduced to n={red.n} (<= {2 * j - 2}), m={red.m} (<= {3 * j - 3})")

# Exactness of the factored solve
g = generate("random", 150, 200, seed=4, weights=(0.1, 10.0))
red, f = greedy_elimination(g)
b = np.random.default_rng(0).standard_normal(g.n)
b -= b.mean()
x = factor_solve(f, lambda c: oracle.dense_solve(red, c), b)
ref = oracle.dense_solve(g, b)
print("relative error vs dense solve:", np.linalg.norm(x - ref) / np.linalg.norm(ref))
