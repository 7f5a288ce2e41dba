"""Normal-equations solver: factor ``A D^2 A' u = v`` once per iteration.

All derivative systems of the interior-point iterations reduce to
solves against the same symmetric positive definite matrix
``A D^2 A'`` with ``D^2 = diag(x_i / s_i)``.  The pattern of that matrix
never changes across iterations, so the fill-reducing ordering and
elimination structure are computed once (``symbolic_analyze``) and every
iteration only runs the numeric ``L Lam L'`` refactorization.

Tiny or negative pivots are replaced by a huge surrogate, which
effectively drops the corresponding equation; this doubles as the
rank-deficiency guard.  A dense LDL' rescue path exists for small
systems when the sparse factorization regularizes heavily.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .model import LpStructureError

PIVOT_SURROGATE = 1e64


class NumericalFailureError(RuntimeError):
    """Factorization or solve broke down beyond recovery."""


def _pattern_csr(A) -> sp.csr_array:
    B = sp.csr_array(A).copy()
    B.data = np.ones_like(B.data)
    return B


def minimum_degree_ordering(pattern: sp.csr_array) -> np.ndarray:
    """Greedy minimum-degree permutation for a symmetric sparsity pattern.

    Eliminates the lowest-degree vertex (ties by index, for determinism)
    and connects its neighbours into a clique, as in the classic ordering
    heuristic for sparse Cholesky.
    """
    m = pattern.shape[0]
    indptr, indices = pattern.indptr, pattern.indices
    adj = [set(indices[indptr[i]:indptr[i + 1]]) - {i} for i in range(m)]
    alive = set(range(m))
    order = np.empty(m, dtype=np.int32)
    for k in range(m):
        v = min(alive, key=lambda i: (len(adj[i]), i))
        order[k] = v
        alive.remove(v)
        nb = adj[v] & alive
        for u in nb:
            adj[u] |= nb
            adj[u].discard(u)
            adj[u].discard(v)
    return order


def _etree_upper(m, Bp, Bi):
    parent = np.full(m, -1, dtype=np.int32)
    ancestor = np.full(m, -1, dtype=np.int64)
    for k in range(m):
        for p in range(Bp[k], Bp[k + 1]):
            i = Bi[p]
            while i != -1 and i < k:
                nxt = ancestor[i]
                ancestor[i] = k
                if nxt == -1:
                    parent[i] = k
                i = nxt
    return parent


def _column_counts(m, Bp, Bi, parent):
    lnz = np.zeros(m, dtype=np.int64)
    flag = np.full(m, -1, dtype=np.int64)
    for k in range(m):
        flag[k] = k
        for p in range(Bp[k], Bp[k + 1]):
            i = Bi[p]
            while i < k and flag[i] != k:
                lnz[i] += 1
                flag[i] = k
                i = parent[i]
    return lnz


@dataclass(frozen=True)
class SymbolicFactor:
    """Reusable elimination structure for one constraint matrix."""

    m: int
    perm: np.ndarray
    parent: np.ndarray
    Lp: np.ndarray
    pattern_hash: str

    @property
    def l_nnz(self) -> int:
        return int(self.Lp[self.m])


def _permuted_upper(B, perm) -> sp.csc_array:
    Bp = sp.csr_array(B)[perm][:, perm]
    upper = sp.triu(Bp, format="csc")
    upper.sort_indices()
    return upper


def _hash_pattern(upper: sp.csc_array) -> str:
    h = hashlib.sha1()
    h.update(upper.indptr.astype(np.int64).tobytes())
    h.update(upper.indices.astype(np.int64).tobytes())
    return h.hexdigest()


def symbolic_analyze(A, ordering="mindeg") -> SymbolicFactor:
    """Fill-reducing ordering and elimination structure for ``A A'``.

    The result is valid for ``A D^2 A'`` with any positive diagonal
    ``D^2``, so one analysis serves every iteration.
    """
    A = sp.csr_array(A)
    m = A.shape[0]
    pattern = _pattern_csr(_pattern_csr(A) @ _pattern_csr(A).T)
    if ordering == "natural":
        perm = np.arange(m, dtype=np.int32)
    else:
        perm = minimum_degree_ordering(pattern)
    upper = _permuted_upper(pattern, perm)
    parent = _etree_upper(m, upper.indptr, upper.indices)
    lnz = _column_counts(m, upper.indptr, upper.indices, parent)
    Lp = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(lnz, out=Lp[1:])
    return SymbolicFactor(m=m, perm=perm, parent=parent, Lp=Lp,
                          pattern_hash=_hash_pattern(upper))


@dataclass
class NormalEqFactor:
    """Numeric ``L Lam L'`` factorization of (permuted) ``A D^2 A'``."""

    m: int
    perm: np.ndarray
    d2: np.ndarray
    Lp: np.ndarray | None
    Li: np.ndarray | None
    Lx: np.ndarray | None
    D: np.ndarray
    regularized: np.ndarray
    pivot_floor: float
    pattern_hash: str = ""
    backend: str = "sparse"
    L_dense: np.ndarray | None = None
    B: sp.csr_array | None = None
    _iperm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        iperm = np.empty(self.m, dtype=np.int64)
        iperm[self.perm] = np.arange(self.m)
        self._iperm = iperm

    @property
    def L(self):
        """Unit lower-triangular factor (permuted order), as sparse CSC."""
        if self.backend == "dense":
            return sp.csc_array(self.L_dense)
        L = sp.csc_array((self.Lx, self.Li, self.Lp), shape=(self.m, self.m))
        return L + sp.eye_array(self.m, format="csc")

    @property
    def Lambda(self) -> np.ndarray:
        return self.D

    def _backsolve(self, pv):
        if self.backend == "dense":
            y = np.linalg.solve(self.L_dense, pv)
            y /= self.D
            return np.linalg.solve(self.L_dense.T, y)
        return _kernels.ldl_solve(self.m, self.Lp, self.Li, self.Lx, self.D, pv)

    def solve(self, v) -> np.ndarray:
        """Solve for one right-hand side with one refinement step.

        The single refinement pass keeps the solve usable late in the
        interior-point run, when ``A D^2 A'`` turns ill-conditioned and
        the raw factorization would feed its error into the residuals.
        """
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.shape != (self.m,):
            raise LpStructureError(f"rhs must have length {self.m}")
        u = self._backsolve(v[self.perm])[self._iperm]
        if self.B is not None:
            resid = v - self.B @ u
            u = u + self._backsolve(resid[self.perm])[self._iperm]
        if not np.isfinite(u).all():
            raise NumericalFailureError("non-finite solution from triangular solve")
        return u


def _dense_ldl(B: np.ndarray, floor: float):
    m = B.shape[0]
    L = np.eye(m)
    D = np.zeros(m)
    reg = []
    for k in range(m):
        d = B[k, k] - (L[k, :k] ** 2) @ D[:k]
        if not d >= floor:
            reg.append(k)
            d = PIVOT_SURROGATE
        D[k] = d
        if k + 1 < m:
            L[k + 1:, k] = (B[k + 1:, k] - L[k + 1:, :k] @ (D[:k] * L[k, :k])) / d
    return L, D, np.asarray(reg, dtype=np.int32)


def assemble_normal_matrix(A, d2) -> sp.csr_array:
    """Form ``A diag(d2) A'`` explicitly (same pattern for any d2 > 0)."""
    A = sp.csr_array(A)
    return sp.csr_array(sp.csr_array(A.multiply(d2)) @ A.T)


def factor(A, d2, symbolic: SymbolicFactor | None = None,
           pivot_floor_rel: float = 1e-12, backend: str = "sparse") -> NormalEqFactor:
    """Factor ``A D^2 A'`` with pivot regularization.

    Parameters
    ----------
    d2 : positive diagonal of ``D^2`` (i.e. x/s elementwise during a solve).
    symbolic : reuse an existing analysis; computed on the fly if omitted.
    pivot_floor_rel : pivots below ``rel * max diagonal`` are regularized.
    """
    A = sp.csr_array(A)
    d2 = np.asarray(d2, dtype=float).reshape(-1)
    if d2.shape != (A.shape[1],):
        raise LpStructureError("d2 must have one entry per column of A")
    if not (d2 > 0).all():
        raise LpStructureError("d2 must be strictly positive")
    B = assemble_normal_matrix(A, d2)
    m = A.shape[0]
    floor = pivot_floor_rel * float(B.diagonal().max())
    if backend == "dense":
        Ld, D, reg = _dense_ldl(B.toarray(), floor)
        if len(reg) == m:
            raise NumericalFailureError("normal matrix fully regularized")
        return NormalEqFactor(m=m, perm=np.arange(m, dtype=np.int32), d2=d2,
                              Lp=None, Li=None, Lx=None, D=D, regularized=reg,
                              pivot_floor=floor, backend="dense", L_dense=Ld,
                              B=B)
    if symbolic is None:
        symbolic = symbolic_analyze(A)
    upper = _permuted_upper(B, symbolic.perm)
    pat = _hash_pattern(upper)
    if pat != symbolic.pattern_hash:
        raise NumericalFailureError("normal-matrix pattern changed between iterations")
    Li, Lx, D, reg = _kernels.ldl_numeric(
        m, upper.indptr, upper.indices, upper.data,
        symbolic.parent, symbolic.Lp, floor, PIVOT_SURROGATE)
    if len(reg) == m:
        raise NumericalFailureError("normal matrix fully regularized")
    return NormalEqFactor(m=m, perm=symbolic.perm, d2=d2, Lp=symbolic.Lp,
                          Li=Li, Lx=Lx, D=D, regularized=reg, pivot_floor=floor,
                          pattern_hash=pat, backend="sparse", B=B)


def solve(fac: NormalEqFactor, v) -> np.ndarray:
    """Solve the factored system for one right-hand side."""
    return fac.solve(v)


class NormalEqSolver:
    """Per-problem wrapper: one symbolic analysis, counted refactorizations.

    ``backend="auto"`` uses the sparse kernel and falls back to a dense
    LDL' when a factorization regularizes a significant fraction of its
    pivots on a small system (m <= dense_max).
    """

    def __init__(self, A, pivot_floor_rel=1e-12, backend="auto", dense_max=200):
        self.A = sp.csr_array(A)
        self.m = self.A.shape[0]
        self.backend = backend
        self.dense_max = dense_max
        self.pivot_floor_rel = pivot_floor_rel
        self.symbolic = symbolic_analyze(self.A) if backend != "dense" else None
        self.num_factorizations = 0

    def factor(self, d2) -> NormalEqFactor:
        self.num_factorizations += 1
        if self.backend == "dense":
            return factor(self.A, d2, pivot_floor_rel=self.pivot_floor_rel,
                          backend="dense")
        fac = factor(self.A, d2, symbolic=self.symbolic,
                     pivot_floor_rel=self.pivot_floor_rel)
        if len(fac.regularized):
            # late-iteration scaling can push genuine pivots under the
            # relative floor; a structurally dependent row fails any
            # floor above roundoff, so accept a stricter retry only if
            # it clears every pivot
            self.num_factorizations += 1
            retry = factor(self.A, d2, symbolic=self.symbolic,
                           pivot_floor_rel=self.pivot_floor_rel * 1e-2)
            if len(retry.regularized) == 0:
                return retry
        heavy = len(fac.regularized) > max(1, self.m // 10)
        if self.backend == "auto" and heavy and self.m <= self.dense_max:
            self.num_factorizations += 1
            fac = factor(self.A, d2, pivot_floor_rel=self.pivot_floor_rel,
                         backend="dense")
        return fac
