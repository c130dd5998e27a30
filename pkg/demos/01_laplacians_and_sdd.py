"""
Graphs, Laplacians and SDD matrices
===================================

A weighted graph stores its edges once; the Laplacian is only ever applied.
Any symmetric diagonally dominant matrix reduces to a Laplacian twice its
size, so the rest of the package only has to solve Laplacian systems.
"""

import numpy as np
import scipy.sparse as sp

from sddkit import SddMatrix, WeightedGraph, generate, laplacian_apply, sdd_to_laplacian

# A triangle with weights 1, 2 and 4
g = WeightedGraph(3, [0, 1, 0], [1, 2, 2], [1.0, 2.0, 4.0])
print(g)
print("L e0 =", laplacian_apply(g, np.array([1.0, 0.0, 0.0])))

# The quadratic form is a weighted sum of squared differences
x = np.random.default_rng(0).standard_normal(3)
print("x^T L x =", x @ laplacian_apply(g, x), "=", g.quadratic_form(x))

# Duplicate pairs are merged by summing weights
h = WeightedGraph(3, [0, 0, 1], [1, 1, 2], [0.5, 0.5, 2.0])
print("merged weights:", h.w)

# Generators for the test families
for name, args in [("path", (5,)), ("cycle", (6,)), ("grid2d", (4, 4)), ("random", (20, 50))]:
    print(name, generate(name, *args))

# A Laplacian reduces to itself ...
a = SddMatrix(generate("grid2d", 3, 3).laplacian())
_, _, red = sdd_to_laplacian(a, np.zeros(9))
print("grid Laplacian:", red.kind)

# ... while a general SDD matrix goes through the double cover
m = SddMatrix(sp.csr_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]])))
big, bhat, red = sdd_to_laplacian(m, np.array([1.0, 0.0]))
print("2x2 SDD:", red.kind, "->", big, "rhs", bhat)
xhat = np.linalg.pinv(big.laplacian().toarray()) @ bhat
print("back-mapped solution:", red.backward(xhat), "(exact: 2/3, 1/3)")
