"""
Command-line tour
=================

Every subcommand writes JSON (bench writes CSV).  ``SDDKIT_ORACLE_LIMIT``
caps the size of problems checked with the dense oracle.
"""

import json
import os
import tempfile

import numpy as np

from sddkit import SddMatrix, generate, store_edge_list, store_matrix_market
from sddkit.cli import run

tmp = tempfile.mkdtemp()
mtx = os.path.join(tmp, "grid.mtx")
cyc = os.path.join(tmp, "cyc100.txt")
store_matrix_market(SddMatrix(generate("grid2d", 20, 20).laplacian()), mtx)
store_edge_list(generate("cycle", 100), cyc)

report = os.path.join(tmp, "r.json")
print("solve exit code:", run(["solve", "--matrix", mtx, "--rhs", "random:3", "--eps", "1e-8",
                                "--report", report, "--seed", "0"]))
d = json.load(open(report))
print({k: d[k] for k in ("n", "m", "iterations", "relative_residual", "anorm_error")})

stats = os.path.join(tmp, "s.json")
run(["sparsify", "--graph", cyc, "--kappa", "10", "--seed", "1", "--verify",
     "--output", os.path.join(tmp, "h.txt"), "--report", stats])
print("measured kappa:", json.load(open(stats))["measured_kappa"])

run(["bench", "--family", "grid2d", "--sizes", "1e3,1e4", "--seed", "0"])
