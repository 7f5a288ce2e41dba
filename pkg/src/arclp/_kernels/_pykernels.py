"""Pure NumPy implementations of the hot kernels.

These mirror the compiled extension (`_ckernels`) exactly; the package
falls back to this module when the extension is not built.  Semantics of
every function are shared with the compiled twin; keep them in sync.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"

HALF_PI = np.pi / 2.0
#: relative slack on the tangency branch condition of the step-length
#: case analysis; within this band the non-binding pi/2 branch is taken.
TANGENT_SNAP = 1e-12


def ldl_numeric(m, Bp, Bi, Bx, parent, Lp, floor, surrogate):
    """Up-looking LDL' factorization of a symmetric matrix.

    Parameters
    ----------
    Bp, Bi, Bx : CSC arrays of the *upper triangle* (diagonal included)
        of the permuted matrix.
    parent : elimination-tree parent array.
    Lp : precomputed column pointers of L (from the symbolic pass).
    floor, surrogate : pivots below ``floor`` are recorded and replaced
        by ``surrogate`` (which effectively drops the equation).

    Returns
    -------
    Li, Lx, D, reg : L in CSC (unit diagonal implicit), the pivot vector,
        and the indices of regularized pivots.
    """
    nnz = int(Lp[m])
    Li = np.zeros(nnz, dtype=np.int32)
    Lx = np.zeros(nnz, dtype=np.float64)
    D = np.zeros(m, dtype=np.float64)
    Y = np.zeros(m, dtype=np.float64)
    pattern = np.zeros(m, dtype=np.int64)
    flag = np.full(m, -1, dtype=np.int64)
    lnz = np.zeros(m, dtype=np.int64)
    reg = []
    for k in range(m):
        Y[k] = 0.0
        top = m
        flag[k] = k
        lnz[k] = 0
        for p in range(Bp[k], Bp[k + 1]):
            i = Bi[p]
            if i > k:
                continue
            Y[i] += Bx[p]
            ln = 0
            while flag[i] != k:
                pattern[ln] = i
                ln += 1
                flag[i] = k
                i = parent[i]
            while ln > 0:
                ln -= 1
                top -= 1
                pattern[top] = pattern[ln]
        d = Y[k]
        Y[k] = 0.0
        for t in range(top, m):
            i = pattern[t]
            yi = Y[i]
            Y[i] = 0.0
            p2 = Lp[i] + lnz[i]
            for p in range(Lp[i], p2):
                Y[Li[p]] -= Lx[p] * yi
            lki = yi / D[i]
            d -= lki * yi
            Li[p2] = k
            Lx[p2] = lki
            lnz[i] += 1
        if not d >= floor:  # also catches NaN
            reg.append(k)
            d = surrogate
        D[k] = d
    return Li, Lx, D, np.asarray(reg, dtype=np.int32)


def ldl_solve(m, Lp, Li, Lx, D, rhs):
    """Solve ``L D L' x = rhs`` given the factor arrays."""
    x = np.array(rhs, dtype=np.float64, copy=True)
    for j in range(m):
        xj = x[j]
        if xj != 0.0:
            for p in range(Lp[j], Lp[j + 1]):
                x[Li[p]] -= Lx[p] * xj
    x /= D
    for j in range(m - 1, -1, -1):
        acc = 0.0
        for p in range(Lp[j], Lp[j + 1]):
            acc += Lx[p] * x[Li[p]]
        x[j] -= acc
    return x


def alpha_bounds(z, dz, ddz, floor):
    """Per-coordinate largest arc angle keeping ``z(a) >= floor``.

    For each i, the largest ``alpha`` in (0, pi/2] such that

        z_i - dz_i*sin(a) + ddz_i*(1 - cos(a)) >= floor

    holds for every ``a`` in [0, alpha], computed by the closed-form case
    analysis on the signs of (dz_i, ddz_i).  Coordinates already below
    the floor get 0.
    """
    z = np.asarray(z, dtype=float)
    u = np.asarray(dz, dtype=float)
    w = np.asarray(ddz, dtype=float)
    d = z - floor
    out = np.full(z.shape, HALF_PI)

    dw = d + w
    r = np.hypot(u, w)
    safe_w = np.where(w != 0.0, w, 1.0)
    safe_u = np.where(u != 0.0, u, 1.0)
    safe_r = np.where(r != 0.0, r, 1.0)

    # dz = 0: pure cosine term, binds only when ddz < 0 pulls below floor
    m1 = (u == 0.0) & (w != 0.0) & (dw < 0.0)
    a1 = np.arccos(np.clip(dw / safe_w, -1.0, 1.0))
    # ddz = 0: pure sine term
    m2 = (w == 0.0) & (u != 0.0) & (u > d)
    a2 = np.arcsin(np.clip(d / safe_u, -1.0, 1.0))
    # dz > 0, ddz > 0: dip at an interior angle; snap near-tangency up
    m3 = (u > 0.0) & (w > 0.0) & (dw < r * (1.0 - TANGENT_SNAP))
    a3 = np.arcsin(np.clip(dw / safe_r, -1.0, 1.0)) - np.arcsin(
        np.clip(w / safe_r, -1.0, 1.0))
    # dz > 0, ddz < 0: monotone decrease
    m4 = (u > 0.0) & (w < 0.0) & (dw < r)
    a4 = np.minimum(
        HALF_PI,
        np.arcsin(np.clip(dw / safe_r, -1.0, 1.0))
        + np.arcsin(np.clip(-w / safe_r, -1.0, 1.0)))
    # dz < 0, ddz < 0: decrease only past the hump
    m5 = (u < 0.0) & (w < 0.0) & (dw < 0.0)
    a5 = np.minimum(
        HALF_PI,
        np.pi
        - np.arcsin(np.clip(-dw / safe_r, -1.0, 1.0))
        - np.arcsin(np.clip(-w / safe_r, -1.0, 1.0)))

    out = np.where(m1, a1, out)
    out = np.where(m2, a2, out)
    out = np.where(m3, a3, out)
    out = np.where(m4, a4, out)
    out = np.where(m5, a5, out)
    # already below the floor: no positive step keeps the bound
    out = np.where(d < 0.0, 0.0, out)
    return out
