"""
Low-stretch spanning trees
==========================

The stretch of an edge is its weight times the resistance of the tree path
joining its endpoints.  Tree edges have stretch 1.  The total stretch
controls how many edges the sparsifier has to keep.
"""

import numpy as np

from sddkit import compute_stretch, generate, low_stretch_tree
from sddkit.lowstretch import shortest_path_tree, star_decomposition_tree

# A cycle: whatever tree is picked, the missing edge closes a path of n-1 edges
g = generate("cycle", 12)
table = compute_stretch(g, low_stretch_tree(g))
print("cycle(12) stretches:", table.stretch, "total", table.total_stretch)

# On grids the star decomposition beats a shortest-path tree
for k in (16, 32, 64):
    g = generate("grid2d", k, k)
    star = compute_stretch(g, star_decomposition_tree(g)).total_stretch
    spt = compute_stretch(g, shortest_path_tree(g)).total_stretch
    print(f"grid {k}x{k}: m={g.m} star={star:.0f} spt={spt:.0f} "
          f"avg stretch={star / g.m:.2f} m log^2 n={g.m * np.log2(g.n) ** 2:.0f}")

# Scaling the tree by kappa divides every non-tree stretch by kappa
g = generate("grid2d", 10, 10)
t = low_stretch_tree(g)
base = compute_stretch(g, t)
scaled = compute_stretch(g, t.with_scale(8.0))
nt = ~base.is_tree
print("ratio of non-tree stretches:", np.unique(np.round(base.stretch[nt] / scaled.stretch[nt], 12)))
