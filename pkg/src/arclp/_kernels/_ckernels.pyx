# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot kernels in ``_pykernels``.

Same inputs, same outputs, same regularization and branch semantics;
only the loop execution differs.  Keep the two modules in sync.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport acos, asin, cos, hypot, pi, sin

cnp.import_array()

BACKEND = "compiled"

cdef double HALF_PI = pi / 2.0
cdef double TANGENT_SNAP = 1e-12


def ldl_numeric(int m, Bp, Bi, Bx, parent, Lp, double floor, double surrogate):
    cdef cnp.int64_t[::1] bp = np.ascontiguousarray(Bp, dtype=np.int64)
    cdef cnp.int64_t[::1] bi = np.ascontiguousarray(Bi, dtype=np.int64)
    cdef double[::1] bx = np.ascontiguousarray(Bx, dtype=np.float64)
    cdef cnp.int32_t[::1] par = np.ascontiguousarray(parent, dtype=np.int32)
    cdef cnp.int64_t[::1] lp = np.ascontiguousarray(Lp, dtype=np.int64)

    nnz = int(lp[m])
    Li_arr = np.zeros(nnz, dtype=np.int32)
    Lx_arr = np.zeros(nnz, dtype=np.float64)
    D_arr = np.zeros(m, dtype=np.float64)
    cdef cnp.int32_t[::1] Li = Li_arr
    cdef double[::1] Lx = Lx_arr
    cdef double[::1] D = D_arr
    cdef double[::1] Y = np.zeros(m, dtype=np.float64)
    cdef cnp.int64_t[::1] pattern = np.zeros(m, dtype=np.int64)
    cdef cnp.int64_t[::1] flag = np.full(m, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] lnz = np.zeros(m, dtype=np.int64)

    reg = []
    cdef Py_ssize_t k, p, p2, t, top, ln, i
    cdef double d, yi, lki
    for k in range(m):
        Y[k] = 0.0
        top = m
        flag[k] = k
        lnz[k] = 0
        for p in range(bp[k], bp[k + 1]):
            i = bi[p]
            if i > k:
                continue
            Y[i] += bx[p]
            ln = 0
            while flag[i] != k:
                pattern[ln] = i
                ln += 1
                flag[i] = k
                i = par[i]
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
            p2 = lp[i] + lnz[i]
            for p in range(lp[i], p2):
                Y[Li[p]] -= Lx[p] * yi
            lki = yi / D[i]
            d -= lki * yi
            Li[p2] = <cnp.int32_t> k
            Lx[p2] = lki
            lnz[i] += 1
        if not d >= floor:  # also catches NaN
            reg.append(k)
            d = surrogate
        D[k] = d
    return Li_arr, Lx_arr, D_arr, np.asarray(reg, dtype=np.int32)


def ldl_solve(int m, Lp, Li, Lx, D, rhs):
    cdef cnp.int64_t[::1] lp = np.ascontiguousarray(Lp, dtype=np.int64)
    cdef cnp.int32_t[::1] li = np.ascontiguousarray(Li, dtype=np.int32)
    cdef double[::1] lx = np.ascontiguousarray(Lx, dtype=np.float64)
    cdef double[::1] dd = np.ascontiguousarray(D, dtype=np.float64)
    x_arr = np.array(rhs, dtype=np.float64, copy=True)
    cdef double[::1] x = x_arr
    cdef Py_ssize_t j, p
    cdef double xj, acc
    for j in range(m):
        xj = x[j]
        if xj != 0.0:
            for p in range(lp[j], lp[j + 1]):
                x[li[p]] -= lx[p] * xj
    for j in range(m):
        x[j] /= dd[j]
    for j in range(m - 1, -1, -1):
        acc = 0.0
        for p in range(lp[j], lp[j + 1]):
            acc += lx[p] * x[li[p]]
        x[j] -= acc
    return x_arr


cdef inline double _clamp1(double t) nogil:
    if t > 1.0:
        return 1.0
    if t < -1.0:
        return -1.0
    return t


cdef inline double _alpha_one(double d, double u, double w) nogil:
    cdef double r, dw
    if d < 0.0:
        return 0.0
    if u == 0.0 and w == 0.0:
        return HALF_PI
    dw = d + w
    if u == 0.0:
        if dw >= 0.0:
            return HALF_PI
        return acos(_clamp1(dw / w))
    if w == 0.0:
        if u <= d:
            return HALF_PI
        return asin(_clamp1(d / u))
    r = hypot(u, w)
    if u > 0.0 and w > 0.0:
        if dw >= r * (1.0 - TANGENT_SNAP):
            return HALF_PI
        return asin(_clamp1(dw / r)) - asin(_clamp1(w / r))
    if u > 0.0:
        if dw >= r:
            return HALF_PI
        return min(HALF_PI, asin(_clamp1(dw / r)) + asin(_clamp1(-w / r)))
    if w < 0.0:
        if dw >= 0.0:
            return HALF_PI
        return min(HALF_PI, pi - asin(_clamp1(-dw / r)) - asin(_clamp1(-w / r)))
    return HALF_PI


def alpha_bounds(z, dz, ddz, double floor):
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[::1] uv = np.ascontiguousarray(dz, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(ddz, dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = _alpha_one(zv[i] - floor, uv[i], wv[i])
    return out_arr
