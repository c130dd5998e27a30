"""
Oversampling and incremental sparsification
===========================================

Sampling edges with probabilities that dominate their leverage scores gives
a spectral approximation.  Scaling a low-stretch tree up by kappa makes the
tree stretches cheap upper bounds for those leverage scores, so few
non-tree edges need to be drawn.
"""

import numpy as np

from sddkit import generate, incremental_sparsify, oracle, sample
from sddkit.sparsify import oversample_check

# Exact leverage scores from the dense oracle
g = generate("random", 40, 200, seed=1, weights=(0.5, 2.0))
lev = g.w * oracle.effective_resistances(g)
print("sum of leverage scores:", lev.sum(), "= n - 1")

h = sample(g, lev, 0.1, np.random.SeedSequence(0))
print("sampled graph:", h)
print("fraction of 100 samples with G <= 2H <= 3G:", oversample_check(g, lev, 0.1, 100, 0))

# Incremental sparsifier on a grid
g = generate("grid2d", 12, 12)
for kappa in (8.0, 20.0):
    r = incremental_sparsify(g, kappa, 0.1, np.random.SeedSequence(1))
    lam = oracle.generalized_eigenvalues(r.graph, g)
    print(f"kappa={kappa:g}: q={r.q} non-tree samples={r.nontree_samples} "
          f"(expected {r.expected_nontree_samples:.0f}) edges {g.m}->{r.graph.m} "
          f"lambda in [{lam[0]:.3f}, {lam[-1]:.1f}] vs [1, {3 * kappa:g}]")

# A small oversampling constant trades approximation quality for size
for cs in (4.0, 0.05, 0.005):
    r = incremental_sparsify(generate("grid2d", 30, 30), 20.0, 0.1, np.random.SeedSequence(2), cs=cs)
    print(f"cs={cs}: kept {r.graph.m} of {r.tree.graph.m} edges")
