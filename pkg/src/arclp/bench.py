"""Batch running, record keeping, and performance profiles.

``run_single`` drives the full pipeline for one file; ``run_suite`` runs
every (problem, algorithm) pair with a shared initial point, presolve,
and stopping criteria so iteration counts are comparable; and
``performance_profile`` turns the records into the usual
fraction-solved-within-factor-tau step functions.
"""
from __future__ import annotations

import csv
import hashlib
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .model import SolveReport, SolverConfig, SolveStatus
from .mps import ModelError, load_mps, recover_solution, to_standard_form
from .presolve import postsolve, presolve
from .solvers import initial_point, solve

RECORD_COLUMNS = ("problem", "algorithm", "status", "iterations",
                  "final_metric", "wall_time", "m_before", "n_before",
                  "m_after", "n_after", "init_hash", "note")


@dataclass
class BenchRecord:
    problem: str
    algorithm: str
    status: str
    iterations: int
    final_metric: float
    wall_time: float
    m_before: int
    n_before: int
    m_after: int
    n_after: int
    init_hash: str = ""
    note: str = ""


def _hash_point(point) -> str:
    h = hashlib.sha1()
    for v in point:
        h.update(np.ascontiguousarray(v, dtype=float).tobytes())
    return h.hexdigest()[:16]


def _prepare(path, cfg):
    """parse -> standardize -> presolve; returns (reduced lp, smap, trace)."""
    g = load_mps(path)
    lp_std, smap = to_standard_form(g)
    if cfg.presolve_enabled:
        pres = presolve(lp_std, scaling_ratio_threshold=cfg.scaling_ratio_threshold)
        if pres.status is not None:
            raise ModelError(f"presolve detected the model is {pres.status.value}")
        return lp_std, smap, pres.lp, pres.trace
    return lp_std, smap, lp_std, None


def _finish_report(report, lp_std, smap, trace):
    """Map the reduced solution back and restate objectives in original terms."""
    if report.iterate is None:
        return report
    it = report.iterate
    if trace is not None:
        x_full, lam_full, s_full = postsolve(trace, it.x, it.lam, it.s)
    else:
        x_full, lam_full, s_full = it.x, it.lam, it.s
    report.objective_primal = float(lp_std.c @ x_full) + smap.obj_offset
    report.objective_dual = float(lp_std.b @ lam_full) + smap.obj_offset
    report.solution = recover_solution(smap, x_full)
    return report


def _report_fully_presolved(lp_std, smap, trace, cfg):
    """Presolve eliminated everything; the trace alone is the solution."""
    x, lam, s = postsolve(trace, np.zeros(0), np.zeros(0), np.zeros(0))
    report = SolveReport(status=SolveStatus.OPTIMAL, iterations=0,
                         algorithm=cfg.algorithm, problem_name=lp_std.name)
    report.objective_primal = float(lp_std.c @ x) + smap.obj_offset
    report.objective_dual = float(lp_std.b @ lam) + smap.obj_offset
    report.final_metric = 0.0
    report.solution = recover_solution(smap, x)
    return report


def run_single(path, cfg: SolverConfig | None = None, quiet=False) -> SolveReport:
    """Solve one MPS file end to end and print a one-line summary."""
    cfg = cfg or SolverConfig()
    lp_std, smap, lp_red, trace = _prepare(path, cfg)
    if lp_red is None:
        report = _report_fully_presolved(lp_std, smap, trace, cfg)
    else:
        report = solve(lp_red, cfg)
        report = _finish_report(report, lp_std, smap, trace)
    report.problem_name = report.problem_name or str(path)
    if not quiet:
        print(f"{report.problem_name}: {cfg.algorithm} status={report.status.value} "
              f"iters={report.iterations} objective={report.objective_primal:.10g} "
              f"metric={report.final_metric:.3e} time={report.wall_time:.2f}s")
    return report


def run_suite(problem_paths, algorithms, cfg: SolverConfig | None = None,
              quiet=False) -> list[BenchRecord]:
    """Run every (problem, algorithm) pair with one shared initial point.

    Per-problem failures are recorded (status ``numerical_failure`` with
    a note) and the suite continues.
    """
    cfg = cfg or SolverConfig()
    records: list[BenchRecord] = []
    for path in problem_paths:
        name = getattr(path, "stem", None) or str(path)
        try:
            lp_std, smap, lp_red, trace = _prepare(path, cfg)
            if lp_red is None:
                for alg in algorithms:
                    records.append(BenchRecord(
                        problem=name, algorithm=alg, status="optimal",
                        iterations=0, final_metric=0.0, wall_time=0.0,
                        m_before=lp_std.m, n_before=lp_std.n, m_after=0,
                        n_after=0, note="fully presolved"))
                continue
            x0 = initial_point(lp_red)
            init_hash = _hash_point(x0)
        except Exception as exc:  # parse/model errors: record and continue
            for alg in algorithms:
                records.append(BenchRecord(
                    problem=name, algorithm=alg, status="numerical_failure",
                    iterations=0, final_metric=math.inf, wall_time=0.0,
                    m_before=0, n_before=0, m_after=0, n_after=0,
                    note=f"{type(exc).__name__}: {exc}"))
            continue
        for alg in algorithms:
            acfg = replace(cfg, algorithm=alg)
            tic = time.perf_counter()
            report = solve(lp_red, acfg, initial=x0)
            report.problem_name = name
            records.append(BenchRecord(
                problem=name, algorithm=alg, status=report.status.value,
                iterations=report.iterations, final_metric=report.final_metric,
                wall_time=time.perf_counter() - tic,
                m_before=lp_std.m, n_before=lp_std.n,
                m_after=lp_red.m, n_after=lp_red.n, init_hash=init_hash))
            if not quiet:
                r = records[-1]
                print(f"{r.problem:<12} {r.algorithm:<5} {r.status:<18} "
                      f"iters={r.iterations:<4} metric={r.final_metric:.3e}")
    records.sort(key=lambda r: (r.problem, r.algorithm))
    return records


def write_records_csv(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow([r.problem, r.algorithm, r.status, r.iterations,
                             repr(r.final_metric), repr(r.wall_time),
                             r.m_before, r.n_before, r.m_after, r.n_after,
                             r.init_hash, r.note])


def read_records_csv(path) -> list[BenchRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(BenchRecord(
                problem=row["problem"], algorithm=row["algorithm"],
                status=row["status"], iterations=int(row["iterations"]),
                final_metric=float(row["final_metric"]),
                wall_time=float(row["wall_time"]),
                m_before=int(row["m_before"]), n_before=int(row["n_before"]),
                m_after=int(row["m_after"]), n_after=int(row["n_after"]),
                init_hash=row.get("init_hash", ""), note=row.get("note", "")))
    return records


@dataclass
class ProfileTable:
    taus: np.ndarray
    algorithms: list[str]
    rho: dict[str, np.ndarray]


def performance_profile(records, metric="iterations", n_grid=50) -> ProfileTable:
    """Fraction of problems solved within a factor tau of the best solver.

    Failed runs (any non-optimal status) get ratio +inf.  The grid is
    logarithmic on [1, tau_max] with tau_max the largest finite ratio.
    """
    if not records:
        raise ValueError("no records to profile")
    problems = sorted({r.problem for r in records})
    algorithms = sorted({r.algorithm for r in records})
    value = {}
    for r in records:
        v = getattr(r, metric)
        if r.status != SolveStatus.OPTIMAL.value:
            v = math.inf
        value[(r.problem, r.algorithm)] = float(v)
    ratios = {a: np.empty(len(problems)) for a in algorithms}
    for pi, p in enumerate(problems):
        vals = [value.get((p, a), math.inf) for a in algorithms]
        best = min(vals)
        for a, v in zip(algorithms, vals):
            ratios[a][pi] = v / best if math.isfinite(best) and best > 0 else math.inf
    finite = np.concatenate([r[np.isfinite(r)] for r in ratios.values()]) \
        if any(np.isfinite(r).any() for r in ratios.values()) else np.array([1.0])
    tau_max = max(1.0, float(finite.max()))
    taus = np.unique(np.logspace(0.0, math.log10(tau_max), n_grid)) \
        if tau_max > 1.0 else np.array([1.0])
    rho = {a: np.array([(ratios[a] <= t).mean() for t in taus])
           for a in algorithms}
    return ProfileTable(taus=taus, algorithms=algorithms, rho=rho)


def write_profile_csv(table: ProfileTable, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau"] + list(table.algorithms))
        for i, t in enumerate(table.taus):
            writer.writerow([repr(float(t))] +
                            [repr(float(table.rho[a][i])) for a in table.algorithms])
