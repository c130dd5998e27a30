"""
Preconditioner chains and the solver
====================================

Alternating sparsification and elimination yields a chain of ever smaller
graphs.  Each level is solved by Chebyshev iteration preconditioned by a
recursive solve of the level below.
"""

import time

import numpy as np

from sddkit import ChainConfig, SolveConfig, build_chain, generate, solve, validate_chain
from sddkit.sparsify import DEFAULT_CS

g = generate("grid2d", 100, 100)
chain = build_chain(g, p=0.1, seed=0)
for s in chain.level_stats():
    if s.get("terminal"):
        print(f"terminal: n={s['n']} m={s['m']}")
    else:
        print(f"level {s['level']}: n={s['n']} m={s['m']} kappa={s['kappa']:g} "
              f"ratio={s['ratio']:.1f} cond={s['cond']:.0f} inner={s['inner_iterations']}")

# Small chains can be checked against the dense oracle
small = build_chain(generate("grid2d", 15, 15), p=0.1, seed=0)
for e in validate_chain(small, oracle_limit=400)["levels"]:
    print({k: e[k] for k in ("level", "ratio_ok", "factor_ok", "interval_ok", "measured_condition")})

# Full solve with a report
b = np.random.default_rng(0).standard_normal(g.n)
b -= b.mean()
t0 = time.perf_counter()
x, rep = solve(g, b, eps=1e-6, seed=0)
print(f"grid 100x100: {rep.iterations} outer iterations, residual {rep.relative_residual:.1e}, "
      f"{time.perf_counter() - t0:.1f}s, level iterations {rep.level_iterations}")

# Oracle-checked accuracy on a small grid
g = generate("grid2d", 20, 20)
b = np.random.default_rng(1).standard_normal(g.n)
b -= b.mean()
x, rep = solve(g, b, eps=1e-8, seed=0)
print(f"grid 20x20: A-norm error {rep.anorm_error:.1e}")

# The faithful oversampling constant keeps almost every edge
faithful = build_chain(generate("grid2d", 12, 12), 0.1,
                       ChainConfig(kappa=8.0, cs=DEFAULT_CS, c_r=0.0, bounds="fixed", direct_threshold=16), seed=1)
print("faithful chain level sizes:", [lvl.a.m for lvl in faithful.levels], "->", faithful.terminal.m)
