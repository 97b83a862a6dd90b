"""Pure numpy implementations of the hot kernels.

Same signatures as the compiled ``_core`` module.  Loops run over the long
axis (steps, matrix rows) and vectorise over the batch axis (phases,
energies), so this fallback stays usable for moderate sizes.
"""
from __future__ import annotations

import numpy as np

LN2 = float(np.log(2.0))


def _opnorm(a, b, c, d):
    s1 = np.hypot(a + d, b - c)
    s2 = np.hypot(a - d, b + c)
    return 0.5 * (s1 + s2)


def _renorm(m00, m01, m10, m11, ls):
    mx = np.maximum(np.maximum(np.abs(m00), np.abs(m01)), np.maximum(np.abs(m10), np.abs(m11)))
    bad = (mx > 2.0) | (mx < 0.5)
    if np.any(bad):
        _, e = np.frexp(np.where(bad & (mx > 0), mx, 1.0))
        e = np.where(bad & (mx > 0), e, 0)
        m00 = np.ldexp(m00, -e)
        m01 = np.ldexp(m01, -e)
        m10 = np.ldexp(m10, -e)
        m11 = np.ldexp(m11, -e)
        ls = ls + e * LN2
    return m00, m01, m10, m11, ls


def chain_generic(a, b, c, d, checkpoints):
    """Left-multiplied product ``A_{n-1} ... A_0`` of per-step 2x2 matrices.

    Parameters
    ----------
    a, b, c, d : ndarray, shape (P, n)
        Entries of ``A_j = [[a, b], [c, d]]`` for P independent sequences.
    checkpoints : ndarray of int
        Sorted step counts at which ``log ||A_{c-1} ... A_0||`` is recorded.

    Returns
    -------
    lognorms : ndarray, shape (P, len(checkpoints))
    final : ndarray, shape (P, 4)
        Scaled final product ``(m00, m01, m10, m11)``.
    log_scale : ndarray, shape (P,)
        ``final * exp(log_scale)`` is the true product.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    c = np.atleast_2d(np.asarray(c, dtype=float))
    d = np.atleast_2d(np.asarray(d, dtype=float))
    P, n = a.shape
    cps = np.asarray(checkpoints, dtype=np.int64)
    out = np.empty((P, len(cps)))
    m00, m01 = np.ones(P), np.zeros(P)
    m10, m11 = np.zeros(P), np.ones(P)
    ls = np.zeros(P)
    ci = 0
    while ci < len(cps) and cps[ci] == 0:
        out[:, ci] = 0.0
        ci += 1
    for j in range(n):
        aj, bj, cj, dj = a[:, j], b[:, j], c[:, j], d[:, j]
        m00, m01, m10, m11 = (aj * m00 + bj * m10, aj * m01 + bj * m11,
                              cj * m00 + dj * m10, cj * m01 + dj * m11)
        m00, m01, m10, m11, ls = _renorm(m00, m01, m10, m11, ls)
        while ci < len(cps) and cps[ci] == j + 1:
            out[:, ci] = ls + np.log(_opnorm(m00, m01, m10, m11))
            ci += 1
    return out, np.stack([m00, m01, m10, m11], axis=1), ls


def chain_schrodinger(w, checkpoints):
    """Product of ``[[w_j, -1], [1, 0]]`` with ``w_j = E - V(j)``; see :func:`chain_generic`."""
    w = np.atleast_2d(np.asarray(w, dtype=float))
    P, n = w.shape
    cps = np.asarray(checkpoints, dtype=np.int64)
    out = np.empty((P, len(cps)))
    m00, m01 = np.ones(P), np.zeros(P)
    m10, m11 = np.zeros(P), np.ones(P)
    ls = np.zeros(P)
    ci = 0
    while ci < len(cps) and cps[ci] == 0:
        out[:, ci] = 0.0
        ci += 1
    for j in range(n):
        wj = w[:, j]
        m00, m01, m10, m11 = wj * m00 - m10, wj * m01 - m11, m00, m01
        m00, m01, m10, m11, ls = _renorm(m00, m01, m10, m11, ls)
        while ci < len(cps) and cps[ci] == j + 1:
            out[:, ci] = ls + np.log(_opnorm(m00, m01, m10, m11))
            ci += 1
    return out, np.stack([m00, m01, m10, m11], axis=1), ls


def sturm_counts(diag, off2, energies):
    """Number of eigenvalues strictly below each energy (LDL^T inertia)."""
    diag = np.asarray(diag, dtype=float)
    off2 = np.asarray(off2, dtype=float)
    E = np.atleast_1d(np.asarray(energies, dtype=float))
    n = len(diag)
    tiny = np.finfo(float).tiny ** 0.5
    count = np.zeros(E.shape, dtype=np.int64)
    q = diag[0] - E
    q = np.where(q == 0.0, -tiny, q)
    count += q < 0
    for i in range(1, n):
        q = diag[i] - E - off2[i - 1] / q
        q = np.where(q == 0.0, -tiny, q)
        count += q < 0
    return count


def bisect_eigenvalues(diag, off2, lo, hi, k_lo, k_hi, tol):
    """Eigenvalues with ascending indices ``k_lo <= k < k_hi`` by bisection.

    ``[lo, hi]`` must enclose the spectrum; bisection stops when the
    bracket is narrower than ``tol``.
    """
    ks = np.arange(k_lo, k_hi)
    a = np.full(len(ks), float(lo))
    b = np.full(len(ks), float(hi))
    if len(ks) == 0:
        return a
    while True:
        width = b - a
        if np.all(width <= tol * np.maximum(1.0, np.abs(a) + np.abs(b))):
            break
        m = 0.5 * (a + b)
        if np.all((m == a) | (m == b)):
            break
        cnt = sturm_counts(diag, off2, m)
        # eigenvalue k lies below m iff more than k eigenvalues are below m
        below = cnt > ks
        b = np.where(below, m, b)
        a = np.where(below, a, m)
    return 0.5 * (a + b)


def tridiag_solve(sub, diag, sup, rhs):
    """Solve a tridiagonal system with partial pivoting.

    ``sub[i]`` is entry ``(i+1, i)``, ``sup[i]`` entry ``(i, i+1)``.  Exact
    zero pivots are replaced by a tiny number (the intended use is inverse
    iteration, where a near-singular solve is the point).
    """
    n = len(diag)
    d = np.array(diag, dtype=float)
    u1 = np.zeros(n)
    u2 = np.zeros(n)
    u1[: n - 1] = sup
    lo = np.array(sub, dtype=float)
    x = np.array(rhs, dtype=float)
    eps = np.finfo(float).eps
    scale = max(1.0, float(np.max(np.abs(diag))) if n else 1.0)
    # rows i hold (d[i], u1[i], u2[i]) on columns i, i+1, i+2
    for i in range(n - 1):
        if abs(lo[i]) > abs(d[i]):
            # swap rows i and i+1
            di, u1i, u2i, xi = d[i], u1[i], u2[i], x[i]
            d[i], u1[i], u2[i], x[i] = lo[i], d[i + 1], u1[i + 1], x[i + 1]
            lo[i], d[i + 1], u1[i + 1], x[i + 1] = di, u1i, u2i, xi
            # lo[i] now holds the old pivot row's first entry
            m = lo[i] / d[i]
            d[i + 1] -= m * u1[i]
            u1[i + 1] -= m * u2[i]
            x[i + 1] -= m * x[i]
        else:
            if d[i] == 0.0:
                d[i] = eps * scale
            m = lo[i] / d[i]
            d[i + 1] -= m * u1[i]
            x[i + 1] -= m * x[i]
    if n and d[n - 1] == 0.0:
        d[n - 1] = eps * scale
    out = np.empty(n)
    for i in range(n - 1, -1, -1):
        s = x[i]
        if i + 1 < n:
            s -= u1[i] * out[i + 1]
        if i + 2 < n:
            s -= u2[i] * out[i + 2]
        out[i] = s / d[i]
    return out


def star_discrepancy_sorted(x):
    """Float star discrepancy of sorted points in ``[0, 1)``."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - x), np.max(x - (i - 1) / n)))
