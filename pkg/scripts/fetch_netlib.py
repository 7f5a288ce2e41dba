#!/usr/bin/env python3
"""Fetch the small Netlib LP test problems used by the acceptance suite.

Downloads uncompressed MPS files where a public mirror carries them and
otherwise converts the NumPy archives that ship with SciPy's linprog
benchmarks (same data, split into equality and inequality rows) into
MPS.  Files land in tests/data/netlib/ by default.

The canonical archive at https://www.netlib.org/lp/data stores the
problems in a bespoke compressed format that needs the ``emps`` tool;
this script intentionally sticks to plain-MPS / npz mirrors.

Usage:
    python scripts/fetch_netlib.py [--dest DIR] [--github-base URL]
                                   [--style raw|web]

``--github-base``/``--style`` let the downloads go through a GitHub
mirror or proxy: style ``raw`` builds ``{base}/{owner}/{repo}/{branch}/
{path}`` (for raw.githubusercontent.com), style ``web`` builds
``{base}/{owner}/{repo}/raw/{branch}/{path}`` (for github.com-shaped
mirrors).
"""
from __future__ import annotations

import argparse
import io
import sys
import urllib.request
from pathlib import Path

PROBLEMS = ("afiro", "adlittle", "blend", "sc50a", "sc50b", "share2b")

#: problems for which a plain-MPS copy is mirrored (HiGHS test instances)
MPS_SOURCES = {
    "afiro": ("ERGO-Code", "HiGHS", "master", "check/instances/afiro.mps"),
    "adlittle": ("ERGO-Code", "HiGHS", "master", "check/instances/adlittle.mps"),
}

NPZ_SOURCE = ("scipy", "scipy", "main",
              "benchmarks/benchmarks/linprog_benchmark_files/{name}.npz")

EXPECTED_DIMS = {  # constraint rows (objective excluded), columns
    "afiro": (27, 32),
    "adlittle": (56, 97),
    "blend": (74, 83),
    "sc50a": (50, 48),
    "sc50b": (50, 48),
    "share2b": (96, 79),
}


def github_url(base: str, style: str, owner: str, repo: str, branch: str,
               path: str) -> str:
    if style == "web":
        return f"{base}/{owner}/{repo}/raw/{branch}/{path}"
    return f"{base}/{owner}/{repo}/{branch}/{path}"


def fetch(url: str) -> bytes:
    print(f"  GET {url}")
    with urllib.request.urlopen(url, timeout=60) as resp:
        return resp.read()


def npz_to_mps(name: str, payload: bytes) -> str:
    """Write the (c, A_ub, b_ub, A_eq, b_eq) arrays as an MPS problem."""
    import numpy as np

    data = np.load(io.BytesIO(payload), allow_pickle=True)
    if data["bounds"].size:
        raise SystemExit(f"{name}: unexpected variable bounds in npz")
    c = np.asarray(data["c"], dtype=float)
    A_ub = np.atleast_2d(np.asarray(data["A_ub"], dtype=float))
    A_eq = np.atleast_2d(np.asarray(data["A_eq"], dtype=float))
    b_ub = np.asarray(data["b_ub"], dtype=float).reshape(-1)
    b_eq = np.asarray(data["b_eq"], dtype=float).reshape(-1)
    n = c.size
    rows = [f"U{i + 1}" for i in range(len(b_ub))] \
        + [f"E{i + 1}" for i in range(len(b_eq))]
    types = ["L"] * len(b_ub) + ["E"] * len(b_eq)
    A = np.vstack([A_ub, A_eq]) if len(b_ub) and len(b_eq) else \
        (A_ub if len(b_ub) else A_eq)
    b = np.concatenate([b_ub, b_eq])

    out = [f"NAME          {name.upper()}", "ROWS", " N  COST"]
    out += [f" {t}  {r}" for t, r in zip(types, rows)]
    out.append("COLUMNS")
    for j in range(n):
        col = f"X{j + 1}"
        entries = []
        if c[j] != 0.0:
            entries.append(("COST", float(c[j])))
        entries += [(rows[i], float(A[i, j])) for i in np.flatnonzero(A[:, j])]
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            line = f"    {col:<10}"
            for rname, val in pair:
                line += f"{rname:<10}{val!r:<24}  "
            out.append(line.rstrip())
    out.append("RHS")
    for i in np.flatnonzero(b):
        out.append(f"    RHS       {rows[i]:<10}{float(b[i])!r}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dest", default=Path(__file__).parent.parent
                        / "tests" / "data" / "netlib", type=Path)
    parser.add_argument("--github-base", default="https://raw.githubusercontent.com")
    parser.add_argument("--style", choices=("raw", "web"), default="raw")
    args = parser.parse_args()
    args.dest.mkdir(parents=True, exist_ok=True)

    failures = []
    for name in PROBLEMS:
        target = args.dest / f"{name}.mps"
        if target.exists():
            print(f"{name}: already present")
            continue
        try:
            if name in MPS_SOURCES:
                owner, repo, branch, path = MPS_SOURCES[name]
                url = github_url(args.github_base, args.style, owner, repo,
                                 branch, path)
                target.write_bytes(fetch(url))
            else:
                owner, repo, branch, path = NPZ_SOURCE
                url = github_url(args.github_base, args.style, owner, repo,
                                 branch, path.format(name=name.upper()))
                target.write_text(npz_to_mps(name, fetch(url)))
            print(f"{name}: wrote {target}")
        except Exception as exc:
            failures.append(name)
            print(f"{name}: FAILED ({exc})", file=sys.stderr)

    # sanity-check dimensions with the package parser when importable
    try:
        sys.path.insert(0, str(Path(__file__).parent.parent / "src"))
        from arclp.mps import parse_mps

        for name in PROBLEMS:
            target = args.dest / f"{name}.mps"
            if not target.exists():
                continue
            g = parse_mps(target.read_bytes())
            if (g.m, g.n) != EXPECTED_DIMS[name]:
                print(f"{name}: unexpected dimensions {(g.m, g.n)}, "
                      f"wanted {EXPECTED_DIMS[name]}", file=sys.stderr)
                failures.append(name)
    except ImportError:
        pass

    if failures:
        print(f"\nincomplete: {sorted(set(failures))}", file=sys.stderr)
        return 1
    print("\nall problems present")
    return 0


if __name__ == "__main__":
    sys.exit(main())
