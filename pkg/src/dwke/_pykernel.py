"""Pure-Python (numpy) collision kernel, used when the compiled core is absent.

Same groups and ranges as ``_ckernel.pyx``; each group is vectorized and
reduced with :func:`math.fsum`, which is at least as accurate as the
compensated sum of the compiled path.  Results agree with it to round-off,
not bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

_fsum = math.fsum


def _prepare(F, n_max):
    F = np.asarray(F, dtype=float)
    K = F.size
    span = 2 * max(n_max, K) + 2
    P = np.zeros(span + K + 2)
    P[1 : K + 1] = F
    sq = np.sqrt(np.arange(P.size, dtype=float))
    return P, sq, K


def _grid(k_lo, k_hi, m_lo, m_hi):
    """Index grids over ``k_lo <= k <= k_hi`` and per-row ``m_lo(k) <= m <= m_hi(k)``."""
    ks = np.arange(k_lo, k_hi + 1)
    if ks.size == 0:
        e = np.empty(0, dtype=int)
        return e, e
    lo = np.broadcast_to(m_lo(ks), ks.shape)
    hi = np.broadcast_to(m_hi(ks), ks.shape)
    width = int(max((hi - lo).max() + 1, 0))
    if width == 0:
        e = np.empty(0, dtype=int)
        return e, e
    m = lo[:, None] + np.arange(width)[None, :]
    k = np.broadcast_to(ks[:, None], m.shape)
    keep = m <= hi[:, None]
    return k[keep], m[keep]


def _terms(P, sq, K, n, c_shift):
    F1 = P[1]
    rn = sq[n]
    irn = 1.0 / rn

    k = np.arange(2, n)
    k2 = np.arange(n + 1, min(2 * n - 1, K) + 1)
    L = 2.0 / n * _fsum([F1, *P[k], *(P[k2] * sq[2 * n - k2] / sq[k2])])

    q = []
    k = np.arange(n + 1, K + 1)
    q.extend(P[k] * P[k] / k)
    k = np.arange((n + 1) // 2, n)
    q.extend(irn * P[k] * P[k] * sq[2 * k - n] / k)
    k, m = _grid((n + 2) // 2, n - 1, lambda k: n + 1 - k, lambda k: k - 1)
    q.extend(2.0 * irn * P[k] * P[m] * sq[k + m - n] / (sq[k] * sq[m]))
    Q = _fsum(q)

    u = []
    k = np.arange(2, n)
    u.extend(4.0 * irn * F1 * P[k] / sq[k])
    k, m = _grid(2, n - 1, lambda k: n + 1, lambda k: np.minimum(n + k - 1, K))
    u.extend(2.0 * irn * P[k] * P[m] * sq[n + k - m] / (sq[k] * sq[m]))
    k, m = _grid(2, n - 1, lambda k: 2, lambda k: k - 1)
    u.extend(4.0 * irn * P[k] * P[m] / sq[k])
    k, m = _grid(n + 1, K, lambda k: k + 1, lambda k: np.minimum(n + k - 1, K))
    u.extend(2.0 * irn * P[k] * P[m] * sq[n + k - m] / (sq[k] * sq[m]))
    U = _fsum(u)

    c = []
    k = np.arange(n + 1, K + 1)
    j = k + c_shift - n
    c.extend(2.0 * F1 * P[k] * P[j] / (sq[k] * sq[j]))
    k = np.arange((n + 2) // 2, n)
    c.extend(P[k] * P[k] * P[2 * k - n] / k)
    k, m = _grid(2, n - 1, lambda k: 2, lambda k: k - 1)
    j = np.maximum(k + m - n, 0)
    c.extend(2.0 * P[k] * P[m] * P[j] / (sq[k] * sq[m]))
    k, m = _grid(n + 1, K, lambda k: 2, lambda k: n - 1)
    j = k + m - n
    c.extend(2.0 * P[k] * P[m] * P[j] / (sq[k] * sq[j]))
    k, m = _grid(n + 2, K, lambda k: n + 1, lambda k: k - 1)
    j = k + m - n
    c.extend(2.0 * rn * P[k] * P[m] * P[j] / (sq[k] * sq[m] * sq[j]))
    k = np.arange(n + 1, K + 1)
    j = 2 * k - n
    c.extend(rn * P[k] * P[k] * P[j] / (k * sq[j]))
    C = _fsum(c)
    return L, Q, U, C


def row_terms(F, n, c_shift=1):
    P, sq, K = _prepare(F, n)
    return _terms(P, sq, K, n, c_shift)


def rhs_rows(F, n_lo, n_hi, c_shift=1):
    P, sq, K = _prepare(F, n_hi)
    out = np.zeros(max(n_hi - n_lo + 1, 0))
    for n in range(n_lo, n_hi + 1):
        L, Q, U, C = _terms(P, sq, K, n, c_shift)
        Fn = P[n] if n <= K else 0.0
        out[n - n_lo] = Fn * (Q - U) - Fn * Fn * L + C
    return out
