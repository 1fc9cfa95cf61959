# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled collision kernel.

Mirrors ``dwke._pykernel`` group by group.  Every group is accumulated with a
Neumaier-compensated sum in a fixed (k outer, m inner) order, so a row does
not depend on how rows are distributed over threads.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


cdef struct Acc:
    double s
    double c


cdef inline void acc_add(Acc* a, double x) noexcept nogil:
    cdef double t = a.s + x
    if fabs(a.s) >= fabs(x):
        a.c += (a.s - t) + x
    else:
        a.c += (x - t) + a.s
    a.s = t


cdef inline double acc_val(Acc* a) noexcept nogil:
    return a.s + a.c


cdef inline double getF(const double* P, Py_ssize_t K, Py_ssize_t i) noexcept nogil:
    if i < 1 or i > K:
        return 0.0
    return P[i]


cdef void row_terms_c(const double* P, Py_ssize_t K, const double* sq, Py_ssize_t n,
                      int c_shift, double* out) noexcept nogil:
    """out = (L, Q, U, C) for frequency n >= 2; P is 1-based (P[0] unused)."""
    cdef Py_ssize_t k, m, j, hi
    cdef double F1 = getF(P, K, 1)
    cdef double Fk, Fm, Fj, rn = sq[n], irn = 1.0 / sq[n]
    cdef Acc a

    # L_n
    a.s = F1; a.c = 0.0
    for k in range(2, n):
        acc_add(&a, getF(P, K, k))
    hi = 2 * n - 1 if 2 * n - 1 < K else K
    for k in range(n + 1, hi + 1):
        acc_add(&a, P[k] * sq[2 * n - k] / sq[k])
    out[0] = 2.0 / n * acc_val(&a)

    # Q_n
    a.s = 0.0; a.c = 0.0
    for k in range(n + 1, K + 1):
        acc_add(&a, P[k] * P[k] / k)
    for k in range((n + 1) // 2, n):
        Fk = getF(P, K, k)
        if Fk != 0.0:
            acc_add(&a, irn * Fk * Fk * sq[2 * k - n] / k)
    for k in range((n + 2) // 2, n):
        Fk = getF(P, K, k)
        if Fk == 0.0:
            continue
        for m in range(n + 1 - k, k):
            Fm = getF(P, K, m)
            if Fm != 0.0:
                acc_add(&a, 2.0 * irn * Fk * Fm * sq[k + m - n] / (sq[k] * sq[m]))
    out[1] = acc_val(&a)

    # U_n
    a.s = 0.0; a.c = 0.0
    for k in range(2, n):
        Fk = getF(P, K, k)
        if Fk != 0.0:
            acc_add(&a, 4.0 * irn * F1 * Fk / sq[k])
    for k in range(2, n):
        Fk = getF(P, K, k)
        if Fk == 0.0:
            continue
        hi = n + k - 1 if n + k - 1 < K else K
        for m in range(n + 1, hi + 1):
            Fm = P[m]
            if Fm != 0.0:
                acc_add(&a, 2.0 * irn * Fk * Fm * sq[n + k - m] / (sq[k] * sq[m]))
    for k in range(2, n):
        Fk = getF(P, K, k)
        if Fk == 0.0:
            continue
        for m in range(2, k):
            Fm = getF(P, K, m)
            if Fm != 0.0:
                acc_add(&a, 4.0 * irn * Fk * Fm / sq[k])
    for k in range(n + 1, K + 1):
        Fk = P[k]
        if Fk == 0.0:
            continue
        hi = n + k - 1 if n + k - 1 < K else K
        for m in range(k + 1, hi + 1):
            Fm = P[m]
            if Fm != 0.0:
                acc_add(&a, 2.0 * irn * Fk * Fm * sq[n + k - m] / (sq[k] * sq[m]))
    out[2] = acc_val(&a)

    # C_n
    a.s = 0.0; a.c = 0.0
    if F1 != 0.0:
        for k in range(n + 1, K + 1):
            j = k + c_shift - n
            Fj = getF(P, K, j)
            if P[k] != 0.0 and Fj != 0.0:
                acc_add(&a, 2.0 * F1 * P[k] * Fj / (sq[k] * sq[j]))
    for k in range((n + 2) // 2, n):
        Fk = getF(P, K, k)
        Fj = getF(P, K, 2 * k - n)
        if Fk != 0.0 and Fj != 0.0:
            acc_add(&a, Fk * Fk * Fj / k)
    for k in range(2, n):
        Fk = getF(P, K, k)
        if Fk == 0.0:
            continue
        for m in range(2, k):
            Fm = getF(P, K, m)
            Fj = getF(P, K, k + m - n)
            if Fm != 0.0 and Fj != 0.0:
                acc_add(&a, 2.0 * Fk * Fm * Fj / (sq[k] * sq[m]))
    for k in range(n + 1, K + 1):
        Fk = P[k]
        if Fk == 0.0:
            continue
        for m in range(2, n):
            Fm = getF(P, K, m)
            Fj = getF(P, K, k + m - n)
            if Fm != 0.0 and Fj != 0.0:
                acc_add(&a, 2.0 * Fk * Fm * Fj / (sq[k] * sq[k + m - n]))
    for k in range(n + 2, K + 1):
        Fk = P[k]
        if Fk == 0.0:
            continue
        for m in range(n + 1, k):
            Fm = P[m]
            Fj = getF(P, K, k + m - n)
            if Fm != 0.0 and Fj != 0.0:
                acc_add(&a, 2.0 * rn * Fk * Fm * Fj / (sq[k] * sq[m] * sq[k + m - n]))
    for k in range(n + 1, K + 1):
        Fk = P[k]
        Fj = getF(P, K, 2 * k - n)
        if Fk != 0.0 and Fj != 0.0:
            acc_add(&a, rn * Fk * Fk * Fj / (k * sq[2 * k - n]))
    out[3] = acc_val(&a)


cdef inline double row_rate(const double* P, Py_ssize_t K, const double* sq, Py_ssize_t n,
                            int c_shift) noexcept nogil:
    cdef double t[4]
    cdef double Fn = getF(P, K, n)
    row_terms_c(P, K, sq, n, c_shift, t)
    return Fn * (t[1] - t[2]) - Fn * Fn * t[0] + t[3]


def _prepare(F, Py_ssize_t n_max):
    F = np.ascontiguousarray(F, dtype=np.float64)
    cdef Py_ssize_t K = F.shape[0]
    P = np.zeros(K + 1, dtype=np.float64)
    P[1:] = F
    span = 2 * (n_max if n_max > K else K) + 2
    sq = np.sqrt(np.arange(span, dtype=np.float64))
    return P, sq


def row_terms(F, Py_ssize_t n, int c_shift=1):
    """(L, Q, U, C) at frequency ``n`` for masses ``F`` (0-based array)."""
    P, sq = _prepare(F, n)
    cdef double[::1] Pv = P
    cdef double[::1] sqv = sq
    cdef double out[4]
    with nogil:
        row_terms_c(&Pv[0], Pv.shape[0] - 1, &sqv[0], n, c_shift, out)
    return out[0], out[1], out[2], out[3]


def rhs_rows(F, Py_ssize_t n_lo, Py_ssize_t n_hi, int c_shift=1):
    """``F_n (Q_n - U_n) - F_n^2 L_n + C_n`` for ``n_lo <= n <= n_hi``."""
    P, sq = _prepare(F, n_hi)
    res = np.zeros(max(n_hi - n_lo + 1, 0), dtype=np.float64)
    cdef double[::1] Pv = P
    cdef double[::1] sqv = sq
    cdef double[::1] rv = res
    cdef Py_ssize_t K = Pv.shape[0] - 1, n
    with nogil:
        for n in range(n_lo, n_hi + 1):
            rv[n - n_lo] = row_rate(&Pv[0], K, &sqv[0], n, c_shift)
    return res
