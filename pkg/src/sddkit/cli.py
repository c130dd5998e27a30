"""Command-line entry point: ``sddkit {solve,sparsify,stretch,bench,verify}``.

Exit codes: 0 success, 1 invalid input, 2 result flagged (solve did not
reach its residual target, or a verification check failed).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import oracle
from .chain import ChainBuildError, build_chain, validate_chain
from .graph import GraphError, SddMatrix, WeightedGraph, generate
from .io import load_edge_list, load_matrix_market, store_edge_list
from .lowstretch import compute_stretch, low_stretch_tree
from .solver import SolveConfig, SolverDivergedError, solve
from .sparsify import DEFAULT_CS, incremental_sparsify

EXIT_OK, EXIT_INVALID, EXIT_FLAGGED = 0, 1, 2


@dataclass
class RunConfig:
    """Everything needed to replay a CLI run; embedded in every report."""

    subcommand: str
    inputs: dict = field(default_factory=dict)
    eps: float | None = None
    p: float | None = None
    kappa: float | None = None
    xi: float | None = None
    cs: float | None = None
    c_r: float | None = None
    seed: int | None = None
    mode: str | None = None
    oracle_limit: int = field(default_factory=oracle.oracle_limit)
    report: str | None = None


def _fresh_seed():
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> 1)


def _dump(obj, path=None, stream=None):
    text = json.dumps(obj, indent=2, sort_keys=False, default=_default)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    if stream is not None:
        stream.write(text + "\n")


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _finite(x):
    return x if x is None or math.isfinite(x) else str(x)


def _load_input(args):
    """Read ``--matrix`` (Matrix Market) or ``--graph`` (edge list)."""
    if getattr(args, "matrix", None):
        return load_matrix_market(args.matrix)
    if getattr(args, "graph", None):
        return load_edge_list(args.graph)
    raise GraphError("one of --matrix or --graph is required")


def _as_graph(obj):
    if isinstance(obj, WeightedGraph):
        return obj
    if obj.is_laplacian():
        return WeightedGraph.from_laplacian(obj.matrix)
    raise GraphError("input is not a Laplacian; this subcommand needs a graph")


def _rhs(spec, n):
    if spec is None or spec.startswith("random:"):
        seed = 0 if spec is None else int(spec.split(":", 1)[1])
        b = np.random.default_rng(seed).standard_normal(n)
        return b
    try:
        b = np.loadtxt(spec, dtype=np.float64, ndmin=1)
    except OSError as exc:
        raise GraphError(f"{spec}: cannot read right-hand side ({exc.strerror or exc})") from exc
    except ValueError as exc:
        raise GraphError(f"{spec}: malformed right-hand side ({exc})") from exc
    if b.shape != (n,):
        raise GraphError(f"{spec}: right-hand side has {b.size} entries, matrix has {n} rows")
    return b


# -- subcommands -------------------------------------------------------------


def cmd_solve(args, out):
    a = _load_input(args)
    if isinstance(a, WeightedGraph):
        a = SddMatrix(a.laplacian())
    rcfg = RunConfig("solve", {"matrix": args.matrix, "graph": args.graph, "rhs": args.rhs},
                     eps=args.eps, p=args.p, kappa=args.kappa, cs=args.cs, c_r=args.c_r,
                     seed=args.seed if args.seed is not None else _fresh_seed(),
                     mode=args.mode, report=args.report)
    b = _rhs(args.rhs, a.n)
    cfg = SolveConfig(kappa=args.kappa, kappa_mode=args.mode, c_r=args.c_r, seed=rcfg.seed,
                      oracle_limit=rcfg.oracle_limit)
    if args.cs is not None:
        cfg.cs = args.cs
    if args.mode == "theory":
        cfg.bounds = "fixed"
        if args.cs is None:
            cfg.cs = DEFAULT_CS
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        x, rep = solve(a, b, args.eps, args.p, cfg)
    d = rep.to_dict()
    d["run_config"] = asdict(rcfg)
    _dump(d, args.report, None if args.report else out)
    if args.solution:
        np.savetxt(args.solution, x, fmt="%.17g")
    if args.report:
        out.write(f"iterations={rep.iterations} relative_residual={rep.relative_residual:.3e}"
                  f" converged={rep.converged} report={args.report}\n")
    return EXIT_OK if rep.converged else EXIT_FLAGGED


def cmd_sparsify(args, out):
    g = _as_graph(_load_input(args))
    seed = args.seed if args.seed is not None else _fresh_seed()
    rcfg = RunConfig("sparsify", {"graph": args.graph, "matrix": args.matrix}, kappa=args.kappa,
                     xi=args.xi, cs=args.cs, seed=seed, mode=args.mode, report=args.report)
    res = incremental_sparsify(g, args.kappa, args.xi, seed, args.mode, args.cs)
    stats = res.stats()
    failed = False
    if args.verify:
        if g.n <= rcfg.oracle_limit:
            ok, lo, hi = oracle.sandwich_check(res.graph, g, 1.0, 3.0 * args.kappa)
            stats.update(measured_lambda_min=lo, measured_lambda_max=_finite(hi),
                         measured_kappa=_finite(hi / lo) if lo > 0 else "inf",
                         sandwich_ok=bool(ok))
            failed = not ok
        else:
            stats["verify_skipped"] = f"n={g.n} exceeds oracle limit {rcfg.oracle_limit}"
    stats["run_config"] = asdict(rcfg)
    if args.output:
        store_edge_list(res.graph, args.output)
    else:
        buf = io.StringIO()
        store_edge_list(res.graph, buf)
        out.write(buf.getvalue())
    _dump(stats, args.report, None if args.report else out)
    return EXIT_FLAGGED if failed else EXIT_OK


def cmd_stretch(args, out):
    g = _as_graph(_load_input(args))
    tree = low_stretch_tree(g)
    table = compute_stretch(g, tree)
    edges = [
        {"u": int(a), "v": int(b), "w": float(w), "stretch": float(s), "is_tree": bool(t)}
        for a, b, w, s, t in zip(g.u, g.v, g.w, table.stretch, table.is_tree)
    ]
    rep = {
        "n": g.n,
        "m": g.m,
        "root": tree.root,
        "method": tree.method,
        "total": table.total_stretch,
        "average": table.total_stretch / g.m if g.m else 0.0,
        "edges": edges,
        "run_config": asdict(RunConfig("stretch", {"graph": args.graph, "matrix": args.matrix},
                                       report=args.report)),
    }
    _dump(rep, args.report, None if args.report else out)
    return EXIT_OK


def _family_graph(family, m_target, seed):
    m_target = max(int(m_target), 1)
    if family == "grid2d":
        k = max(2, round(math.sqrt(m_target / 2.0)))
        return generate("grid2d", k, k)
    if family == "path":
        return generate("path", m_target + 1)
    if family == "cycle":
        return generate("cycle", max(3, m_target))
    if family == "star":
        return generate("star", m_target + 1)
    if family == "complete":
        n = max(2, round((1 + math.sqrt(1 + 8 * m_target)) / 2))
        return generate("complete", n)
    if family == "random":
        n = max(2, m_target // 4)
        return generate("random", n, max(m_target, n - 1), seed=seed)
    raise GraphError(f"unknown family {family!r}")


def cmd_bench(args, out):
    sizes = [float(s) for s in args.sizes.split(",") if s.strip()]
    if sorted(sizes) != sizes:
        raise GraphError("--sizes must be ascending")
    seed = args.seed if args.seed is not None else 0
    rows = []
    for size in sizes:
        g = _family_graph(args.family, size, seed)
        b = np.random.default_rng(seed).standard_normal(g.n)
        b -= b.mean()
        cfg = SolveConfig(kappa=args.kappa, seed=seed, oracle_limit=0)
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            _, rep = solve(g, b, args.eps, args.p, cfg)
        total = 1e3 * (time.perf_counter() - t0)
        rows.append({
            "n": g.n,
            "m": g.m,
            "build_ms": rep.wallclock_ms["build"],
            "solve_ms": rep.wallclock_ms["solve"],
            "total_ms": total,
            "iterations": rep.iterations,
            "levels": len(rep.levels) - 1,
            "relative_residual": rep.relative_residual,
            "converged": rep.converged,
        })
    fields = list(rows[0]) if rows else []
    w = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    summary = {"family": args.family, "eps": args.eps, "rows": rows,
               "run_config": asdict(RunConfig("bench", {"family": args.family, "sizes": sizes},
                                              eps=args.eps, p=args.p, kappa=args.kappa, seed=seed,
                                              report=args.report))}
    if len(rows) >= 2:
        m = np.log([r["m"] for r in rows])
        t = np.log([max(r["solve_ms"], 1e-6) for r in rows])
        slope = float(np.polyfit(m, t, 1)[0])
        summary["slope"] = slope
        out.write(f"# log-log slope of solve time vs m: {slope:.3f}\n")
    if args.report:
        _dump(summary, args.report)
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_FLAGGED


def cmd_verify(args, out):
    """Build a chain for the input and run every oracle check that fits."""
    g = _as_graph(_load_input(args))
    seed = args.seed if args.seed is not None else _fresh_seed()
    rcfg = RunConfig("verify", {"graph": args.graph, "matrix": args.matrix}, p=args.p,
                     kappa=args.kappa, seed=seed, report=args.report)
    rep = {"n": g.n, "m": g.m}
    tree = low_stretch_tree(g)
    tree.validate()
    rep["tree"] = {"method": tree.method, "total_stretch": tree.total_stretch}
    cfg = SolveConfig(kappa=args.kappa, seed=seed)
    chain = build_chain(g, args.p, cfg, seed)
    rep["chain"] = validate_chain(chain, rcfg.oracle_limit)
    ok = rep["chain"]["ok"]
    if g.n <= rcfg.oracle_limit:
        b = np.random.default_rng(seed).standard_normal(g.n)
        b -= b.mean()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            _, srep = solve(g, b, args.eps, args.p, cfg)
        rep["solve"] = {"anorm_error": srep.anorm_error, "eps": args.eps,
                        "ok": srep.anorm_error is not None and srep.anorm_error <= args.eps}
        ok &= rep["solve"]["ok"]
    rep["ok"] = bool(ok)
    rep["run_config"] = asdict(rcfg)
    _dump(rep, args.report, None if args.report else out)
    return EXIT_OK if ok else EXIT_FLAGGED


# -- parser ------------------------------------------------------------------


def _prob(s):
    v = float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {s}")
    return v


def _positive(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def _kappa(s):
    v = float(s)
    if not v >= 1:
        raise argparse.ArgumentTypeError(f"kappa must be >= 1, got {s}")
    return v


def build_parser():
    ap = argparse.ArgumentParser(prog="sddkit", description="Nearly-linear-time SDD / Laplacian solver toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    def inputs(p, matrix=True):
        grp = p.add_mutually_exclusive_group(required=True)
        if matrix:
            grp.add_argument("--matrix", help="Matrix Market file (coordinate, symmetric)")
        else:
            p.set_defaults(matrix=None)
        grp.add_argument("--graph", help="edge-list file: 'n m' header then 'u v w' lines")

    p = sub.add_parser("solve", help="solve A x = b for an SDD matrix")
    inputs(p)
    p.add_argument("--rhs", default="random:0", help="file of n numbers, or random:<seed>")
    p.add_argument("--eps", type=_prob, default=1e-6)
    p.add_argument("--p", type=_prob, default=0.1)
    p.add_argument("--seed", type=int)
    p.add_argument("--kappa", type=_kappa, default=SolveConfig.kappa)
    p.add_argument("--mode", choices=["practical", "theory"], default="practical")
    p.add_argument("--cs", type=_positive)
    p.add_argument("--c-r", dest="c_r", type=float, default=SolveConfig.c_r)
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.add_argument("--solution", help="write x here, one value per line")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sparsify", help="incremental sparsifier of a graph")
    inputs(p)
    p.add_argument("--kappa", type=_kappa, required=True)
    p.add_argument("--xi", type=_prob, default=0.1)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=["keep-tree", "literal"], default="keep-tree")
    p.add_argument("--cs", type=_positive, default=DEFAULT_CS)
    p.add_argument("--verify", action="store_true", help="measure the condition number with the dense oracle")
    p.add_argument("--output", help="write the sparsifier edge list here instead of stdout")
    p.add_argument("--report", help="write the stats JSON here instead of stdout")
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("stretch", help="low-stretch tree and per-edge stretch")
    inputs(p)
    p.add_argument("--report")
    p.set_defaults(func=cmd_stretch)

    p = sub.add_parser("bench", help="timing sweep over a graph family")
    p.add_argument("--family", default="grid2d",
                   choices=["grid2d", "path", "cycle", "star", "complete", "random"])
    p.add_argument("--sizes", default="1e3,1e4,1e5", help="ascending target edge counts")
    p.add_argument("--eps", type=_prob, default=1e-6)
    p.add_argument("--p", type=_prob, default=0.1)
    p.add_argument("--kappa", type=_kappa, default=SolveConfig.kappa)
    p.add_argument("--seed", type=int)
    p.add_argument("--report")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="oracle checks of the tree, chain and solver on one input")
    inputs(p)
    p.add_argument("--eps", type=_prob, default=1e-8)
    p.add_argument("--p", type=_prob, default=0.1)
    p.add_argument("--kappa", type=_kappa, default=SolveConfig.kappa)
    p.add_argument("--seed", type=int)
    p.add_argument("--report")
    p.set_defaults(func=cmd_verify)
    return ap


def run(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except (GraphError, ValueError, ChainBuildError, SolverDivergedError,
            oracle.OracleLimitError) as exc:
        sys.stderr.write(f"sddkit {args.command}: error: {exc}\n")
        return EXIT_INVALID
    except OSError as exc:
        name = exc.filename or ""
        sys.stderr.write(f"sddkit {args.command}: error: {name}: {exc.strerror or exc}\n")
        return EXIT_INVALID


def main():
    sys.exit(run())
