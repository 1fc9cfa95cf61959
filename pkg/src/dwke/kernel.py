"""Closed-form collision terms of the discrete wave kinetic equation.

For ``n >= 2`` the masses evolve as::

    dF_n/dt = F_n (Q_n - U_n) - F_n^2 L_n + C_n

and ``F_1`` closes the system through mass conservation.  The hot loops live
in a compiled extension (``dwke._ckernel``); when it is not importable, or
``DWKE_BACKEND=python`` is set, the numpy implementation in
``dwke._pykernel`` is used instead.  :data:`BACKEND` names the active one.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from dwke import _pykernel
from dwke.spectrum import Spectrum

try:
    if os.environ.get("DWKE_BACKEND", "").lower() == "python":
        raise ImportError("python backend requested")
    from dwke import _ckernel as _backend

    BACKEND = "compiled"
except ImportError:
    _backend = _pykernel
    BACKEND = "python"

BACKENDS = {"python": _pykernel}
if BACKEND == "compiled":
    BACKENDS["compiled"] = _backend

#: Shift used in the first group of ``C_n``; the factor ``F_1`` there is the
#: extracted ``m = 1`` term of ``sum_m F_k F_m F_{k+m-n}``.
C_SHIFT = 1


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class KernelTerms:
    n: int
    L: float
    Q: float
    U: float
    C: float


@dataclass(frozen=True)
class MonotoneTriple:
    w_plus: float
    w_zero: float
    w_minus: float


def _check_n(n: int) -> None:
    if n < 2:
        raise KernelError(f"collision terms are defined for n >= 2, got {n}")


def _values(s) -> np.ndarray:
    return s.values if isinstance(s, Spectrum) else np.asarray(s, dtype=float)


def kernel_terms(s: Spectrum, n: int, *, c_shift: int = C_SHIFT, backend=None) -> KernelTerms:
    _check_n(n)
    impl = _backend if backend is None else BACKENDS[backend]
    L, Q, U, C = impl.row_terms(_values(s), n, c_shift)
    return KernelTerms(n, L, Q, U, C)


def term_L(s: Spectrum, n: int) -> float:
    return kernel_terms(s, n).L


def term_Q(s: Spectrum, n: int) -> float:
    return kernel_terms(s, n).Q


def term_U(s: Spectrum, n: int) -> float:
    return kernel_terms(s, n).U


def term_C(s: Spectrum, n: int) -> float:
    return kernel_terms(s, n).C


def rhs_rows(s, n_max: int, *, c_shift: int = C_SHIFT, threads: int = 1, backend=None) -> np.ndarray:
    """Closed-form rates for rows ``2..n_max``; ``n_max`` may exceed the cutoff.

    Returns an array indexed like a spectrum (entry ``i`` is frequency
    ``i + 1``); entry 0 is left at zero.
    """
    F = _values(s)
    impl = _backend if backend is None else BACKENDS[backend]
    out = np.zeros(n_max)
    if n_max < 2:
        return out
    if threads <= 1 or n_max < 16:
        out[1:] = impl.rhs_rows(F, 2, n_max, c_shift)
        return out
    # rows are independent; each is reduced in a fixed order, so the split
    # does not change any bit of the result
    bounds = np.linspace(2, n_max + 1, threads + 1).astype(int)
    chunks = [(lo, hi - 1) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(lambda c: (c, impl.rhs_rows(F, c[0], c[1], c_shift)), chunks)
        for (lo, hi), part in parts:
            out[lo - 1 : hi] = part
    return out


def rhs(s, *, threads: int = 1, backend=None, c_shift: int = C_SHIFT) -> np.ndarray:
    """Truncated right-hand side ``dF_n/dt`` for ``n = 1..cutoff``.

    Rows ``n >= 2`` come from the closed forms with ``F_n = 0`` beyond the
    cutoff; row 1 is ``-sum_{n>=2} dF_n/dt`` so total mass is conserved
    exactly.  Flux leaving through the cutoff is lost.
    """
    F = _values(s)
    out = rhs_rows(F, F.size, c_shift=c_shift, threads=threads, backend=backend)
    out[0] = -math.fsum(out[1:])
    return out


def rhs_H(s: Spectrum, n: int) -> float:
    """Rate of ``H_n = 1/F_n``: ``H_n (U_n - Q_n) + L_n - H_n^2 C_n``."""
    _check_n(n)
    Fn = s.F(n)
    if Fn <= 0:
        raise KernelError(f"H_{n} is undefined: F_{n} = {Fn!r}")
    t = kernel_terms(s, n)
    H = 1.0 / Fn
    return H * (t.U - t.Q) + t.L - H * H * t.C


# -- monotonicity functionals ----------------------------------------------


def sort_triple(w1: float, w2: float, w3: float) -> MonotoneTriple:
    if min(w1, w2, w3) < 0:
        raise KernelError("frequencies must be non-negative")
    hi, mid, lo = sorted((w1, w2, w3), reverse=True)
    return MonotoneTriple(hi, mid, lo)


def g_functional(phi: Callable[[float], float], w1: float, w2: float, w3: float) -> float:
    """Symmetrized integrand ``G_phi``; non-negative whenever ``phi`` is convex."""
    t = sort_triple(w1, w2, w3)
    wp, w0, wm = t.w_plus, t.w_zero, t.w_minus
    h1 = phi(wp + w0 - wm) + phi(wm + wp - w0) - 2.0 * phi(wp)
    inner = w0 + wm - wp
    # phi may be undefined below zero; the coefficient vanishes there anyway
    h2 = phi(wp) + phi(inner) - phi(w0) - phi(wm) if inner > 0 else 0.0
    return (math.sqrt(wm) * h1 + math.sqrt(max(inner, 0.0)) * h2) / 3.0
