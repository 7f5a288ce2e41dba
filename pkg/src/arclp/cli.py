"""Command-line front end.

Subcommands::

    arclp solve <file> [--alg arc1|arc2|mpc] [--config cfg.json] ...
    arclp bench <dir> --algs arc1,arc2,mpc --out results.csv
    arclp profile results.csv --out profile.csv
    arclp kernel-bench [--m M] [--n N]

Exit codes: 0 success, 1 solver failure, 2 input error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import _kernels
from .bench import (performance_profile, read_records_csv, run_single,
                    run_suite, write_profile_csv, write_records_csv)
from .model import ALGORITHMS, LpStructureError, SolverConfig, SolveStatus
from .mps import ModelError, MpsParseError, UnsupportedFeatureError


def _config_from(args) -> SolverConfig:
    values = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        known = {f.name for f in fields(SolverConfig)}
        unknown = set(loaded) - known
        if unknown:
            raise LpStructureError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    if getattr(args, "alg", None):
        values["algorithm"] = args.alg
    if getattr(args, "max_iter", None) is not None:
        values["max_iterations"] = args.max_iter
    if getattr(args, "tol", None) is not None:
        values["epsilon"] = args.tol
    if getattr(args, "time_limit", None) is not None:
        values["time_limit"] = args.time_limit
    if getattr(args, "no_presolve", False):
        values["presolve_enabled"] = False
    return SolverConfig(**values)


def _cmd_solve(args) -> int:
    cfg = _config_from(args)
    report = run_single(args.file, cfg)
    return 0 if report.status == SolveStatus.OPTIMAL else 1


def _cmd_bench(args) -> int:
    cfg = _config_from(args)
    algs = [a.strip() for a in args.algs.split(",") if a.strip()]
    for a in algs:
        if a not in ALGORITHMS:
            raise LpStructureError(f"unknown algorithm {a!r}")
    root = Path(args.dir)
    paths = sorted(p for p in root.iterdir()
                   if p.suffix.lower() == ".mps") if root.is_dir() else []
    if not paths:
        print(f"no .mps files found in {root}", file=sys.stderr)
        return 2
    records = run_suite(paths, algs, cfg)
    write_records_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _cmd_profile(args) -> int:
    records = read_records_csv(args.records)
    table = performance_profile(records, metric=args.metric, n_grid=args.grid)
    write_profile_csv(table, args.out)
    print(f"wrote profile over {len(table.taus)} tau values to {args.out}")
    return 0


def _cmd_kernel_bench(args) -> int:
    """Time each kernel backend on one synthetic normal-equations instance."""
    from .kkt import PIVOT_SURROGATE, _permuted_upper, assemble_normal_matrix, \
        symbolic_analyze

    rng = np.random.default_rng(args.seed)
    m, n = args.m, args.n
    import scipy.sparse as sp
    dense = rng.random((m, n)) * (rng.random((m, n)) < args.density)
    dense[:, :m] += np.eye(m) * 2.0
    A = sp.csr_array(dense)
    d2 = rng.uniform(0.5, 2.0, n)
    sym = symbolic_analyze(A)
    upper = _permuted_upper(assemble_normal_matrix(A, d2), sym.perm)
    rhs = rng.normal(size=m)
    z = rng.uniform(0.5, 2.0, n)
    dz = rng.normal(size=n)
    ddz = rng.normal(size=n)

    print(f"kernel benchmark: m={m} n={n} density={args.density} "
          f"L nnz={sym.l_nnz} repeats={args.repeats}")
    print(f"{'backend':<10} {'ldl_factor':>12} {'ldl_solve':>12} {'alpha_bounds':>14}")
    for name, mod in sorted(_kernels.get_backends().items()):
        tic = time.perf_counter()
        for _ in range(args.repeats):
            Li, Lx, D, _ = mod.ldl_numeric(m, upper.indptr, upper.indices,
                                           upper.data, sym.parent, sym.Lp,
                                           1e-20, PIVOT_SURROGATE)
        t_factor = (time.perf_counter() - tic) / args.repeats
        tic = time.perf_counter()
        for _ in range(args.repeats):
            mod.ldl_solve(m, sym.Lp, Li, Lx, D, rhs)
        t_solve = (time.perf_counter() - tic) / args.repeats
        tic = time.perf_counter()
        for _ in range(args.repeats):
            mod.alpha_bounds(z, dz, ddz, 1e-3)
        t_alpha = (time.perf_counter() - tic) / args.repeats
        print(f"{name:<10} {t_factor * 1e3:>10.3f}ms {t_solve * 1e3:>10.3f}ms "
              f"{t_alpha * 1e3:>12.3f}ms")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arclp",
        description="Arc-search interior-point LP solver and benchmark harness"
                    f" (kernel backend: {_kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one MPS file")
    p.add_argument("file")
    p.add_argument("--alg", choices=ALGORITHMS)
    p.add_argument("--config", help="JSON file with SolverConfig fields")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--tol", type=float)
    p.add_argument("--time-limit", type=float, dest="time_limit")
    p.add_argument("--no-presolve", action="store_true", dest="no_presolve")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("bench", help="run a directory of MPS files")
    p.add_argument("dir")
    p.add_argument("--algs", default="arc1,arc2,mpc")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--tol", type=float)
    p.add_argument("--time-limit", type=float, dest="time_limit")
    p.add_argument("--no-presolve", action="store_true", dest="no_presolve")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("profile", help="performance profile from a records CSV")
    p.add_argument("records")
    p.add_argument("--out", required=True)
    p.add_argument("--metric", default="iterations",
                   choices=("iterations", "wall_time"))
    p.add_argument("--grid", type=int, default=50)
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("kernel-bench",
                       help="compare compiled and pure-python kernel backends")
    p.add_argument("--m", type=int, default=300)
    p.add_argument("--n", type=int, default=900)
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_kernel_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MpsParseError, UnsupportedFeatureError, ModelError,
            LpStructureError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
