# cython: language_level=3
"""Compiled kernels: scaled 2x2 chains, Sturm counts, tridiagonal solves.

Mirrors :mod:`qpgordon._pycore` exactly (same signatures and outputs up to
floating-point reassociation).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, frexp, ldexp, log, hypot, sqrt

cnp.import_array()

cdef double LN2 = 0.6931471805599453


cdef inline double _opnorm(double a, double b, double c, double d) nogil:
    return 0.5 * (hypot(a + d, b - c) + hypot(a - d, b + c))


cdef inline int _rescale(double* m, double* ls) nogil:
    cdef double mx = fabs(m[0])
    cdef int e
    if fabs(m[1]) > mx: mx = fabs(m[1])
    if fabs(m[2]) > mx: mx = fabs(m[2])
    if fabs(m[3]) > mx: mx = fabs(m[3])
    if (mx > 2.0 or mx < 0.5) and mx > 0.0:
        frexp(mx, &e)
        m[0] = ldexp(m[0], -e)
        m[1] = ldexp(m[1], -e)
        m[2] = ldexp(m[2], -e)
        m[3] = ldexp(m[3], -e)
        ls[0] += e * LN2
    return 0


def chain_generic(a, b, c, d, checkpoints):
    cdef double[:, ::1] A = np.ascontiguousarray(np.atleast_2d(a), dtype=np.float64)
    cdef double[:, ::1] B = np.ascontiguousarray(np.atleast_2d(b), dtype=np.float64)
    cdef double[:, ::1] C = np.ascontiguousarray(np.atleast_2d(c), dtype=np.float64)
    cdef double[:, ::1] D = np.ascontiguousarray(np.atleast_2d(d), dtype=np.float64)
    cdef long[::1] cps = np.ascontiguousarray(checkpoints, dtype=np.int64)
    cdef Py_ssize_t P = A.shape[0], n = A.shape[1], m = cps.shape[0]
    out_np = np.empty((P, m))
    fin_np = np.empty((P, 4))
    ls_np = np.empty(P)
    cdef double[:, ::1] out = out_np
    cdef double[:, ::1] fin = fin_np
    cdef double[::1] lsv = ls_np
    cdef Py_ssize_t p, j, ci
    cdef double M[4]
    cdef double t0, t1, t2, t3, ls
    with nogil:
        for p in range(P):
            M[0] = 1.0; M[1] = 0.0; M[2] = 0.0; M[3] = 1.0
            ls = 0.0
            ci = 0
            while ci < m and cps[ci] == 0:
                out[p, ci] = 0.0
                ci += 1
            for j in range(n):
                t0 = A[p, j] * M[0] + B[p, j] * M[2]
                t1 = A[p, j] * M[1] + B[p, j] * M[3]
                t2 = C[p, j] * M[0] + D[p, j] * M[2]
                t3 = C[p, j] * M[1] + D[p, j] * M[3]
                M[0] = t0; M[1] = t1; M[2] = t2; M[3] = t3
                _rescale(M, &ls)
                while ci < m and cps[ci] == j + 1:
                    out[p, ci] = ls + log(_opnorm(M[0], M[1], M[2], M[3]))
                    ci += 1
            fin[p, 0] = M[0]; fin[p, 1] = M[1]; fin[p, 2] = M[2]; fin[p, 3] = M[3]
            lsv[p] = ls
    return out_np, fin_np, ls_np


def chain_schrodinger(w, checkpoints):
    cdef double[:, ::1] W = np.ascontiguousarray(np.atleast_2d(w), dtype=np.float64)
    cdef long[::1] cps = np.ascontiguousarray(checkpoints, dtype=np.int64)
    cdef Py_ssize_t P = W.shape[0], n = W.shape[1], m = cps.shape[0]
    out_np = np.empty((P, m))
    fin_np = np.empty((P, 4))
    ls_np = np.empty(P)
    cdef double[:, ::1] out = out_np
    cdef double[:, ::1] fin = fin_np
    cdef double[::1] lsv = ls_np
    cdef Py_ssize_t p, j, ci
    cdef double M[4]
    cdef double t0, t1, ls, wj
    with nogil:
        for p in range(P):
            M[0] = 1.0; M[1] = 0.0; M[2] = 0.0; M[3] = 1.0
            ls = 0.0
            ci = 0
            while ci < m and cps[ci] == 0:
                out[p, ci] = 0.0
                ci += 1
            for j in range(n):
                wj = W[p, j]
                t0 = wj * M[0] - M[2]
                t1 = wj * M[1] - M[3]
                M[2] = M[0]; M[3] = M[1]
                M[0] = t0; M[1] = t1
                _rescale(M, &ls)
                while ci < m and cps[ci] == j + 1:
                    out[p, ci] = ls + log(_opnorm(M[0], M[1], M[2], M[3]))
                    ci += 1
            fin[p, 0] = M[0]; fin[p, 1] = M[1]; fin[p, 2] = M[2]; fin[p, 3] = M[3]
            lsv[p] = ls
    return out_np, fin_np, ls_np


cdef inline long _count(const double[::1] dg, const double[::1] off2, double E,
                        double tiny) nogil:
    cdef Py_ssize_t i, n = dg.shape[0]
    cdef long cnt = 0
    cdef double q = dg[0] - E
    if q == 0.0:
        q = -tiny
    if q < 0.0:
        cnt += 1
    for i in range(1, n):
        q = dg[i] - E - off2[i - 1] / q
        if q == 0.0:
            q = -tiny
        if q < 0.0:
            cnt += 1
    return cnt


def sturm_counts(diag, off2, energies):
    cdef double[::1] dg = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[::1] o2 = np.ascontiguousarray(off2, dtype=np.float64)
    cdef double[::1] Es = np.ascontiguousarray(np.atleast_1d(energies), dtype=np.float64)
    res = np.empty(Es.shape[0], dtype=np.int64)
    cdef long[::1] r = res
    cdef double tiny = sqrt(np.finfo(float).tiny)
    cdef Py_ssize_t k
    with nogil:
        for k in range(Es.shape[0]):
            r[k] = _count(dg, o2, Es[k], tiny)
    return res


def bisect_eigenvalues(diag, off2, double lo, double hi, long k_lo, long k_hi, double tol):
    cdef double[::1] dg = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[::1] o2 = np.ascontiguousarray(off2, dtype=np.float64)
    cdef long nk = k_hi - k_lo if k_hi > k_lo else 0
    res = np.empty(nk)
    cdef double[::1] r = res
    cdef double tiny = sqrt(np.finfo(float).tiny)
    cdef double a, b, mid, scale
    cdef long k, kk
    with nogil:
        for kk in range(nk):
            k = k_lo + kk
            a = lo
            b = hi
            while True:
                scale = fabs(a) + fabs(b)
                if scale < 1.0:
                    scale = 1.0
                if b - a <= tol * scale:
                    break
                mid = 0.5 * (a + b)
                if mid == a or mid == b:
                    break
                if _count(dg, o2, mid, tiny) > k:
                    b = mid
                else:
                    a = mid
            r[kk] = 0.5 * (a + b)
    return res


def tridiag_solve(sub, diag, sup, rhs):
    cdef Py_ssize_t n = len(diag)
    d_np = np.array(diag, dtype=np.float64)
    lo_np = np.zeros(max(n - 1, 0), dtype=np.float64)
    lo_np[:] = sub
    u1_np = np.zeros(n)
    u1_np[: n - 1] = sup
    u2_np = np.zeros(n)
    x_np = np.array(rhs, dtype=np.float64)
    out_np = np.empty(n)
    cdef double[::1] d = d_np
    cdef double[::1] lo = lo_np
    cdef double[::1] u1 = u1_np
    cdef double[::1] u2 = u2_np
    cdef double[::1] x = x_np
    cdef double[::1] out = out_np
    cdef double eps = np.finfo(float).eps
    cdef double scale = max(1.0, float(np.max(np.abs(d_np)))) if n else 1.0
    cdef double di, u1i, u2i, xi, mm, s
    cdef Py_ssize_t i
    with nogil:
        for i in range(n - 1):
            if fabs(lo[i]) > fabs(d[i]):
                di = d[i]; u1i = u1[i]; u2i = u2[i]; xi = x[i]
                d[i] = lo[i]; u1[i] = d[i + 1]; u2[i] = u1[i + 1]; x[i] = x[i + 1]
                lo[i] = di; d[i + 1] = u1i; u1[i + 1] = u2i; x[i + 1] = xi
                mm = lo[i] / d[i]
                d[i + 1] -= mm * u1[i]
                u1[i + 1] -= mm * u2[i]
                x[i + 1] -= mm * x[i]
            else:
                if d[i] == 0.0:
                    d[i] = eps * scale
                mm = lo[i] / d[i]
                d[i + 1] -= mm * u1[i]
                x[i + 1] -= mm * x[i]
        if n > 0 and d[n - 1] == 0.0:
            d[n - 1] = eps * scale
        i = n - 1
        while i >= 0:
            s = x[i]
            if i + 1 < n:
                s -= u1[i] * out[i + 1]
            if i + 2 < n:
                s -= u2[i] * out[i + 2]
            out[i] = s / d[i]
            i -= 1
    return out_np


def star_discrepancy_sorted(x):
    cdef double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t i, n = xs.shape[0]
    cdef double best = 0.0, t
    with nogil:
        for i in range(n):
            t = (i + 1.0) / n - xs[i]
            if t > best:
                best = t
            t = xs[i] - (<double>i) / n
            if t > best:
                best = t
    return best
