"""Problem reductions applied before solving, with an exact reversal map.

Five rules run to a fixed point, each individually toggleable:

* ``zero_rows``: structurally empty rows (infeasible if b != 0)
* ``zero_cols``: structurally empty columns (unbounded if c < 0)
* ``fixed_vars``: singleton rows forcing a variable's value
* ``dup_rows``: proportional duplicate rows (infeasible on inconsistent
  right-hand sides)
* ``col_singletons``: columns appearing in one row whose sign pattern
  guarantees the eliminated variable stays >= 0

Each applied reduction records enough to rebuild a full-dimension
primal-dual point from a reduced one; undoing in reverse order preserves
feasibility and complementarity exactly (up to roundoff).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .model import LpStructureError, StandardLp

ALL_RULES = ("zero_rows", "zero_cols", "fixed_vars", "dup_rows", "col_singletons")

_DUP_TOL_EXACT = 1e-12
_DUP_TOL_AGGRESSIVE = 1e-8


class ModelStatus(enum.Enum):
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Reduction:
    """One applied rule with its undo data.

    Indices refer to the problem state immediately before this reduction
    was applied; entry index tuples are already renumbered to the state
    immediately after it (so undo can read the reduced vectors directly).
    """

    kind: str
    row: int = -1
    col: int = -1
    value: float = 0.0
    a_ij: float = 0.0
    c_j: float = 0.0
    b_i: float = 0.0
    idx: tuple = ()
    vals: tuple = ()


@dataclass
class PresolveTrace:
    reductions: list[Reduction] = field(default_factory=list)
    obj_offset: float = 0.0
    m_original: int = 0
    n_original: int = 0
    m_reduced: int = 0
    n_reduced: int = 0


@dataclass
class PresolveResult:
    lp: StandardLp | None
    trace: PresolveTrace
    status: ModelStatus | None = None


def scaling_ratio(A) -> float:
    """``max|A_ij| / min{|A_kl| : A_kl != 0}`` of the coefficient matrix."""
    A = sp.csr_array(A)
    data = A.data[A.data != 0]
    if data.size == 0:
        raise LpStructureError("scaling ratio undefined for an all-zero matrix")
    absd = np.abs(data)
    return float(absd.max() / absd.min())


def _drop_row(A, b, i):
    keep = np.ones(A.shape[0], dtype=bool)
    keep[i] = False
    return A[keep], b[keep]


def _drop_col(A, c, j):
    keep = np.ones(A.shape[1], dtype=bool)
    keep[j] = False
    return A[:, keep], c[keep]


def _find_duplicate(A, b, tol):
    """First pair of proportional rows; returns (i, k, gamma, consistent)."""
    m = A.shape[0]
    indptr, indices, data = A.indptr, A.indices, A.data
    buckets: dict[tuple, list[int]] = {}
    for i in range(m):
        sl = slice(indptr[i], indptr[i + 1])
        key = tuple(indices[sl])
        buckets.setdefault(key, []).append(i)
    for key, rows in buckets.items():
        if len(rows) < 2 or len(key) == 0:
            continue
        for a_pos in range(len(rows)):
            for b_pos in range(a_pos + 1, len(rows)):
                i, k = rows[a_pos], rows[b_pos]
                vi = data[indptr[i]:indptr[i + 1]]
                vk = data[indptr[k]:indptr[k + 1]]
                gamma = vk[0] / vi[0]
                if np.abs(vk - gamma * vi).max() <= tol * max(1.0, np.abs(vk).max()):
                    consistent = abs(b[k] - gamma * b[i]) <= tol * max(
                        1.0, abs(b[k]), abs(gamma * b[i]))
                    return i, k, gamma, consistent
    return None


def presolve(lp: StandardLp, rules=ALL_RULES,
             scaling_ratio_threshold: float = 1e8) -> PresolveResult:
    """Reduce a standard-form LP, recording an exact undo trace.

    Detected primal infeasibility or unboundedness is reported through
    ``PresolveResult.status`` rather than raised.  Proportional-row
    matching uses an exact tolerance unless the coefficient magnitudes
    span more than ``scaling_ratio_threshold``, which switches the rule
    to a looser comparison.
    """
    A = sp.csr_array(lp.A).copy()
    A.sum_duplicates()
    A.eliminate_zeros()
    b = lp.b.copy()
    c = lp.c.copy()
    trace = PresolveTrace(m_original=lp.m, n_original=lp.n)
    dup_tol = _DUP_TOL_EXACT
    try:
        if scaling_ratio(A) > scaling_ratio_threshold:
            dup_tol = _DUP_TOL_AGGRESSIVE
    except LpStructureError:
        pass

    def fail(status):
        trace.m_reduced, trace.n_reduced = A.shape
        return PresolveResult(lp=None, trace=trace, status=status)

    changed = True
    while changed:
        changed = False
        A = sp.csr_array(A)
        A.eliminate_zeros()
        A.sort_indices()
        m, n = A.shape
        row_nnz = np.diff(A.indptr)

        if "zero_rows" in rules:
            empty = np.flatnonzero(row_nnz == 0)
            if empty.size:
                i = int(empty[0])
                if abs(b[i]) > 1e-12 * (1.0 + np.abs(b).max()):
                    return fail(ModelStatus.INFEASIBLE)
                trace.reductions.append(Reduction(kind="zero_row", row=i))
                A, b = _drop_row(A, b, i)
                changed = True
                continue

        col_nnz = np.diff(sp.csc_array(A).indptr)
        if "zero_cols" in rules:
            empty = np.flatnonzero(col_nnz == 0)
            if empty.size:
                j = int(empty[0])
                if c[j] < 0:
                    return fail(ModelStatus.UNBOUNDED)
                trace.reductions.append(Reduction(kind="zero_col", col=j, c_j=c[j]))
                A, c = _drop_col(A, c, j)
                changed = True
                continue

        if "fixed_vars" in rules:
            singles = np.flatnonzero(row_nnz == 1)
            if singles.size:
                i = int(singles[0])
                j = int(A.indices[A.indptr[i]])
                a_ij = float(A.data[A.indptr[i]])
                v = b[i] / a_ij
                if v < -1e-12 * (1.0 + abs(b[i])):
                    return fail(ModelStatus.INFEASIBLE)
                v = max(v, 0.0)
                colj = sp.csc_array(A)[:, [j]].tocoo()
                other = [(int(r), float(val)) for r, val in zip(colj.coords[0], colj.data)
                         if r != i]
                # renumber to the frame with row i removed
                idx = tuple(r - (r > i) for r, _ in other)
                vals = tuple(val for _, val in other)
                trace.reductions.append(Reduction(
                    kind="fixed_var", row=i, col=j, value=v, a_ij=a_ij,
                    c_j=float(c[j]), idx=idx, vals=vals))
                for (r, val) in other:
                    b[r] -= val * v
                trace.obj_offset += float(c[j]) * v
                A, b = _drop_row(A, b, i)
                A, c = _drop_col(A, c, j)
                changed = True
                continue

        if "dup_rows" in rules:
            hit = _find_duplicate(A, b, dup_tol)
            if hit is not None:
                i, k, gamma, consistent = hit
                if not consistent:
                    return fail(ModelStatus.INFEASIBLE)
                trace.reductions.append(Reduction(kind="dup_row", row=k))
                A, b = _drop_row(A, b, k)
                changed = True
                continue

        if "col_singletons" in rules:
            Acsc = sp.csc_array(A)
            singles = np.flatnonzero(np.diff(Acsc.indptr) == 1)
            for j in singles:
                j = int(j)
                i = int(Acsc.indices[Acsc.indptr[j]])
                a_ij = float(Acsc.data[Acsc.indptr[j]])
                rowi = A[[i], :].tocoo()
                other = [(int(col), float(val)) for col, val
                         in zip(rowi.coords[1], rowi.data) if col != j]
                if b[i] / a_ij < 0:
                    continue
                if any(val / a_ij > 0 for _, val in other):
                    continue
                idx = tuple(col - (col > j) for col, _ in other)
                vals = tuple(val for _, val in other)
                trace.reductions.append(Reduction(
                    kind="col_singleton", row=i, col=j, a_ij=a_ij,
                    c_j=float(c[j]), b_i=float(b[i]), idx=idx, vals=vals))
                for col, val in other:
                    c[col] -= c[j] * val / a_ij
                trace.obj_offset += float(c[j]) * b[i] / a_ij
                A, b = _drop_row(A, b, i)
                A, c = _drop_col(A, c, j)
                changed = True
                break
            if changed:
                continue

    trace.m_reduced, trace.n_reduced = A.shape
    if A.shape[0] == 0 or A.shape[1] == 0:
        # every row and column eliminated: the reductions solved the problem
        return PresolveResult(lp=None, trace=trace, status=None)
    reduced = StandardLp(A=A, b=b, c=c, name=lp.name)
    return PresolveResult(lp=reduced, trace=trace, status=None)


def postsolve(trace: PresolveTrace, x, lam, s):
    """Rebuild a full-dimension point from a reduced-problem one.

    Reductions are undone in reverse order; dual values for re-inserted
    rows are chosen so complementarity and dual feasibility carry over.
    """
    x = np.asarray(x, dtype=float).copy()
    lam = np.asarray(lam, dtype=float).copy()
    s = np.asarray(s, dtype=float).copy()
    if x.shape != (trace.n_reduced,) or lam.shape != (trace.m_reduced,) \
            or s.shape != (trace.n_reduced,):
        raise LpStructureError("solution dimensions do not match the trace")
    for red in reversed(trace.reductions):
        if red.kind == "zero_row" or red.kind == "dup_row":
            lam = np.insert(lam, red.row, 0.0)
        elif red.kind == "zero_col":
            x = np.insert(x, red.col, 0.0)
            s = np.insert(s, red.col, red.c_j)
        elif red.kind == "fixed_var":
            dual_rest = float(np.dot(red.vals, lam[list(red.idx)])) if red.idx else 0.0
            lam_i = (red.c_j - dual_rest) / red.a_ij
            lam = np.insert(lam, red.row, lam_i)
            x = np.insert(x, red.col, red.value)
            s = np.insert(s, red.col, 0.0)
        elif red.kind == "col_singleton":
            act = float(np.dot(red.vals, x[list(red.idx)])) if red.idx else 0.0
            x_j = (red.b_i - act) / red.a_ij
            lam = np.insert(lam, red.row, red.c_j / red.a_ij)
            x = np.insert(x, red.col, x_j)
            s = np.insert(s, red.col, 0.0)
        else:
            raise LpStructureError(f"unknown reduction kind {red.kind!r}")
    if x.shape != (trace.n_original,) or lam.shape != (trace.m_original,):
        raise LpStructureError("trace did not rebuild the original dimensions")
    return x, lam, s
