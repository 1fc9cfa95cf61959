"""Brute-force rates from the weak formulation.

Every ordered triple ``(a, b, c)`` of supported frequencies with
``d = a + b - c >= 1`` contributes

    Phi * F_a F_b F_c / sqrt(a b c),   Phi = min(sqrt a, sqrt b, sqrt c, sqrt d)

to rows ``d`` and ``c`` and removes it from rows ``a`` and ``b``.  This module
shares no code with :mod:`dwke.kernel` beyond :func:`g_functional`, and is
the reference the closed forms are checked against.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable

import numpy as np

from dwke.kernel import g_functional
from dwke.spectrum import Spectrum


@dataclass(frozen=True)
class InteractionTriple:
    w1: int
    w2: int
    w3: int

    @property
    def w4(self) -> int:
        return self.w1 + self.w2 - self.w3

    @property
    def phi_min(self) -> float:
        if self.w4 <= 0:
            return 0.0
        return math.sqrt(min(self.w1, self.w2, self.w3, self.w4))


def _support(F):
    return [(i + 1, float(x)) for i, x in enumerate(F) if x != 0.0]


def _values(s):
    return s.values if isinstance(s, Spectrum) else np.asarray(s, dtype=float)


def oracle_contributions(s, n_max: int) -> dict[int, list[float]]:
    """Signed per-triple contributions to each row ``1..n_max``."""
    rows: dict[int, list[float]] = defaultdict(list)
    sup = _support(_values(s))
    for (a, Fa), (b, Fb), (c, Fc) in itertools.product(sup, repeat=3):
        d = a + b - c
        if d <= 0:
            continue
        coef: dict[int, int] = defaultdict(int)
        coef[d] += 1
        coef[c] += 1
        coef[a] -= 1
        coef[b] -= 1
        if not any(coef.values()):
            continue
        w = InteractionTriple(a, b, c).phi_min * Fa * Fb * Fc / math.sqrt(a * b * c)
        for r, k in coef.items():
            if k and r <= n_max:
                rows[r].append(k * w)
    return rows


def oracle_rhs(s, n_max: int) -> np.ndarray:
    """``dF_n/dt`` for ``n = 1..n_max`` (0-based array), untruncated."""
    rows = oracle_contributions(s, n_max)
    out = np.zeros(n_max)
    for r, terms in rows.items():
        out[r - 1] = math.fsum(terms)
    return out


def oracle_gross(s, n_max: int) -> np.ndarray:
    """Sum of absolute contributions per row; the natural scale of its round-off."""
    rows = oracle_contributions(s, n_max)
    out = np.zeros(n_max)
    for r, terms in rows.items():
        out[r - 1] = math.fsum(abs(t) for t in terms)
    return out


def oracle_functional_rate(s, phi: Callable[[float], float]) -> float:
    """``d/dt sum_n phi(n) F_n`` in the symmetrized ``G_phi`` form."""
    sup = _support(_values(s))
    terms = [
        Fa * Fb * Fc / math.sqrt(a * b * c) * g_functional(phi, a, b, c)
        for (a, Fa), (b, Fb), (c, Fc) in itertools.product(sup, repeat=3)
    ]
    return math.fsum(terms)


def bump(n: int) -> Callable[[float], float]:
    """Test function equal to 1 at ``n`` and 0 at every other integer."""
    return lambda w: 1.0 if w == n else 0.0


def scaled_errors(closed: np.ndarray, s, n_max: int) -> np.ndarray:
    """``|closed - oracle|`` per row, relative to the row's gross magnitude.

    Dividing by the sum of absolute contributions (not by the net rate) keeps
    rows whose terms nearly cancel from reporting round-off as error.  Rows
    with no contributions must match exactly.  Row 1 of the closed-form
    system is the negated sum of the other rows, so its scale is the summed
    gross magnitude of all rows.
    """
    ref = oracle_rhs(s, n_max)
    gross = oracle_gross(s, n_max)
    gross[0] = math.fsum(gross)
    diff = np.abs(np.asarray(closed[:n_max], dtype=float) - ref)
    out = np.zeros(n_max)
    nz = gross > 0
    out[nz] = diff[nz] / gross[nz]
    out[~nz] = np.where(diff[~nz] == 0, 0.0, np.inf)
    return out
