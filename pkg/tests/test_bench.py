import math

import numpy as np
import pytest

from arclp import SolverConfig, SolveStatus
from arclp.bench import (BenchRecord, performance_profile, read_records_csv,
                         run_single, run_suite, write_profile_csv,
                         write_records_csv)
from arclp.cli import main

TRIVIAL_MPS = """\
NAME          TRIVIAL
ROWS
 N  COST
 E  R1
COLUMNS
    X         COST      1.0        R1        1.0
RHS
    RHS       R1        1.0
ENDATA
"""

SECOND_MPS = """\
NAME          BOXY
ROWS
 N  COST
 L  CAP
COLUMNS
    X         COST      -1.0       CAP       1.0
    Y         COST      -2.0       CAP       1.0
RHS
    RHS       CAP       1.0
ENDATA
"""


@pytest.fixture
def problem_dir(tmp_path):
    (tmp_path / "trivial.mps").write_text(TRIVIAL_MPS)
    (tmp_path / "boxy.mps").write_text(SECOND_MPS)
    return tmp_path


class TestRunSingle:
    def test_trivial_presolved_outright(self, problem_dir, capsys):
        # the fixed-variable reduction solves this one without iterating
        report = run_single(problem_dir / "trivial.mps",
                            SolverConfig(algorithm="arc2"))
        assert report.status == SolveStatus.OPTIMAL
        assert report.iterations == 0
        assert report.objective_primal == pytest.approx(1.0, abs=1e-7)
        assert "status=optimal" in capsys.readouterr().out

    def test_trivial_baseline_loop_is_fast(self, problem_dir):
        report = run_single(problem_dir / "trivial.mps",
                            SolverConfig(algorithm="mpc",
                                         presolve_enabled=False), quiet=True)
        assert report.status == SolveStatus.OPTIMAL
        assert report.iterations <= 5
        assert report.objective_primal == pytest.approx(1.0, abs=1e-7)

    def test_trivial_with_arc_algorithms(self, problem_dir):
        # flat angle landscape: sigma runs to its bound and mu contracts
        # by ~sigma_max per step, so the arcs take a dozen-odd iterations
        for alg in ("arc1", "arc2"):
            report = run_single(problem_dir / "trivial.mps",
                                SolverConfig(algorithm=alg,
                                             presolve_enabled=False),
                                quiet=True)
            assert report.status == SolveStatus.OPTIMAL
            assert report.final_metric < 1e-8
            assert report.iterations <= 30
            assert report.objective_primal == pytest.approx(1.0, abs=1e-7)

    def test_inequality_problem_objective(self, problem_dir):
        report = run_single(problem_dir / "boxy.mps",
                            SolverConfig(algorithm="arc2"), quiet=True)
        assert report.status == SolveStatus.OPTIMAL
        assert report.objective_primal == pytest.approx(-2.0, abs=1e-6)


class TestRunSuite:
    def test_pairs_and_shared_initial_point(self, problem_dir):
        records = run_suite(sorted(problem_dir.glob("*.mps")),
                            ["arc2", "mpc"], SolverConfig(), quiet=True)
        assert len(records) == 4
        by_problem = {}
        for r in records:
            by_problem.setdefault(r.problem, set()).add(r.init_hash)
        for hashes in by_problem.values():
            assert len(hashes) == 1  # identical initial point per problem

    def test_csv_round_trip(self, problem_dir, tmp_path):
        records = run_suite(sorted(problem_dir.glob("*.mps")),
                            ["arc1", "mpc"], SolverConfig(), quiet=True)
        out = tmp_path / "records.csv"
        write_records_csv(records, out)
        assert read_records_csv(out) == records

    def test_rerun_reproduces_iteration_counts(self, problem_dir):
        paths = sorted(problem_dir.glob("*.mps"))
        first = run_suite(paths, ["arc1", "mpc"], SolverConfig(), quiet=True)
        second = run_suite(paths, ["arc1", "mpc"], SolverConfig(), quiet=True)
        for a, b in zip(first, second):
            assert (a.problem, a.algorithm, a.status, a.iterations,
                    a.final_metric) == (b.problem, b.algorithm, b.status,
                                        b.iterations, b.final_metric)

    def test_netlib_single_run(self):
        from conftest import NETLIB_DIR

        path = NETLIB_DIR / "afiro.mps"
        if not path.exists():
            pytest.skip("netlib data not available")
        report = run_single(path, SolverConfig(algorithm="arc2"), quiet=True)
        assert report.status == SolveStatus.OPTIMAL
        assert report.final_metric < 1e-8
        assert report.objective_primal == pytest.approx(-464.75314286,
                                                        rel=1e-6)

    def test_failures_recorded_and_suite_continues(self, problem_dir):
        (problem_dir / "broken.mps").write_text("NAME X\nROWS\nGARBAGE\n")
        records = run_suite(sorted(problem_dir.glob("*.mps")), ["mpc"],
                            SolverConfig(), quiet=True)
        noted = [r for r in records if r.problem == "broken"]
        assert len(noted) == 1
        assert noted[0].status == "numerical_failure"
        assert "line" in noted[0].note
        assert len(records) == 3


def _record(problem, alg, iters, status="optimal"):
    return BenchRecord(problem=problem, algorithm=alg, status=status,
                       iterations=iters, final_metric=0.0, wall_time=1.0,
                       m_before=1, n_before=1, m_after=1, n_after=1)


class TestPerformanceProfile:
    def test_single_algorithm_fraction_solved(self):
        records = [_record("p1", "a", 10), _record("p2", "a", 5),
                   _record("p3", "a", 7, status="iteration_limit")]
        table = performance_profile(records)
        assert table.rho["a"][0] == pytest.approx(2 / 3)

    def test_strict_winner_at_tau_one(self):
        records = []
        for i, (fast, slow) in enumerate([(3, 6), (10, 30), (7, 21)]):
            records.append(_record(f"p{i}", "fast", fast))
            records.append(_record(f"p{i}", "slow", slow))
        table = performance_profile(records)
        assert table.rho["fast"][0] == 1.0
        assert table.rho["slow"][0] == 0.0
        assert table.rho["slow"][-1] == 1.0

    def test_hand_computed_three_by_two(self, tmp_path):
        # problem p1: a=10, b=20 -> ratios 1, 2
        # problem p2: a=12, b=12 -> ratios 1, 1
        # problem p3: a fails, b=30 -> ratios inf, 1
        records = [_record("p1", "a", 10), _record("p1", "b", 20),
                   _record("p2", "a", 12), _record("p2", "b", 12),
                   _record("p3", "a", 40, status="step_too_small"),
                   _record("p3", "b", 30)]
        table = performance_profile(records)
        ratios = {"a": [1.0, 1.0, math.inf], "b": [2.0, 1.0, 1.0]}
        for alg in ("a", "b"):
            for t, rho in zip(table.taus, table.rho[alg]):
                expected = sum(r <= t for r in ratios[alg]) / 3
                assert rho == expected
        assert table.rho["a"][0] == pytest.approx(2 / 3)
        assert table.rho["b"][0] == pytest.approx(2 / 3)
        assert table.rho["b"][-1] == 1.0
        assert table.rho["a"][-1] == pytest.approx(2 / 3)  # failure never solves
        out = tmp_path / "profile.csv"
        write_profile_csv(table, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "tau,a,b"
        # emitted CSV reproduces the table exactly
        for line, t, ra, rb in zip(lines[1:], table.taus, table.rho["a"],
                                   table.rho["b"]):
            st, sa, sb = line.split(",")
            assert float(st) == t and float(sa) == ra and float(sb) == rb

    def test_monotone_and_bounded(self):
        rng = np.random.default_rng(0)
        records = []
        for p in range(6):
            for alg in ("x", "y", "z"):
                ok = rng.random() > 0.2
                records.append(_record(
                    f"p{p}", alg, int(rng.integers(5, 50)),
                    status="optimal" if ok else "numerical_failure"))
        table = performance_profile(records)
        for alg in table.algorithms:
            rho = table.rho[alg]
            assert (np.diff(rho) >= 0).all()
            assert (rho <= 1.0).all()

    def test_empty_records_rejected(self):
        with pytest.raises(ValueError):
            performance_profile([])


class TestCli:
    def test_solve_success_exit_code(self, problem_dir, capsys):
        code = main(["solve", str(problem_dir / "trivial.mps"), "--alg", "mpc"])
        assert code == 0

    def test_malformed_file_exit_code_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.mps"
        bad.write_text("NAME X\nROWS\nNOT A SECTION\n")
        assert main(["solve", str(bad)]) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_file_exit_code_two(self, tmp_path):
        assert main(["solve", str(tmp_path / "nope.mps")]) == 2

    def test_bench_and_profile_commands(self, problem_dir, tmp_path, capsys):
        out = tmp_path / "records.csv"
        assert main(["bench", str(problem_dir), "--algs", "arc2,mpc",
                     "--out", str(out)]) == 0
        assert out.exists()
        prof = tmp_path / "profile.csv"
        assert main(["profile", str(out), "--out", str(prof)]) == 0
        header = prof.read_text().splitlines()[0]
        assert header == "tau,arc2,mpc"

    def test_config_file_and_overrides(self, problem_dir, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text('{"algorithm": "mpc", "max_iterations": 50}')
        assert main(["solve", str(problem_dir / "trivial.mps"),
                     "--config", str(cfgfile)]) == 0

    def test_unknown_config_key_rejected(self, problem_dir, tmp_path):
        cfgfile = tmp_path / "cfg.json"
        cfgfile.write_text('{"no_such_option": 1}')
        assert main(["solve", str(problem_dir / "trivial.mps"),
                     "--config", str(cfgfile)]) == 2

    def test_kernel_bench_runs(self, capsys):
        assert main(["kernel-bench", "--m", "30", "--n", "60",
                     "--repeats", "1"]) == 0
        out = capsys.readouterr().out
        assert "backend" in out and "python" in out
