"""Nearly-linear-time solvers for symmetric diagonally dominant systems.

The pipeline: reduce an SDD matrix to a graph Laplacian, build a chain of
progressively smaller preconditioners by sparsifying over a low-stretch
spanning tree and eliminating degree-1/2 vertices, then solve with
recursive preconditioned Chebyshev iteration.
"""

from .chain import ChainBuildError, ChainConfig, PreconditionerChain, build_chain, validate_chain
from .elimination import EliminationFactor, factor_backward, factor_forward, factor_solve, greedy_elimination
from .graph import (
    DisconnectedGraphError,
    GraphError,
    ReductionMap,
    SddMatrix,
    WeightedGraph,
    generate,
    laplacian_apply,
    sdd_to_laplacian,
)
from .io import load_edge_list, load_matrix_market, store_edge_list, store_matrix_market
from .lowstretch import SpanningTree, compute_stretch, low_stretch_tree
from .solver import ChebyshevParams, SolveConfig, SolveReport, p_chebyshev, r_p_chebyshev, solve
from .sparsify import incremental_sparsify, sample

__version__ = "0.1.0"

__all__ = [
    "ChainBuildError",
    "ChainConfig",
    "ChebyshevParams",
    "DisconnectedGraphError",
    "EliminationFactor",
    "GraphError",
    "PreconditionerChain",
    "ReductionMap",
    "SddMatrix",
    "SolveConfig",
    "SolveReport",
    "SpanningTree",
    "WeightedGraph",
    "build_chain",
    "compute_stretch",
    "factor_backward",
    "factor_forward",
    "factor_solve",
    "generate",
    "greedy_elimination",
    "incremental_sparsify",
    "laplacian_apply",
    "load_edge_list",
    "load_matrix_market",
    "low_stretch_tree",
    "p_chebyshev",
    "r_p_chebyshev",
    "sample",
    "sdd_to_laplacian",
    "solve",
    "store_edge_list",
    "store_matrix_market",
    "validate_chain",
]
