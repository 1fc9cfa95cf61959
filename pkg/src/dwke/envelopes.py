"""Decay envelopes for the approach of the spectrum to a Dirac mass at 1.

Upper bound on the deficit ``1 - F_1``, the lower bound on ``F_2`` obtained
from an integrating-factor majorant of ``H_2 = 1/F_2``, and the conditional
lower bound on ``F_n`` for large ``n``.  All lower-bound formulas use the
shifted clock ``tau = t - t0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from dwke.integrator import Trajectory
from dwke.spectrum import Spectrum, energy

# |alpha - 1| below this uses the logarithmic branch
ALPHA_LOG_EPS = 1e-12


class EnvelopeError(ValueError):
    pass


@dataclass(frozen=True)
class DecayEnvelope:
    t0: float
    E: float
    F1_t0: float
    c1: float
    b1: float
    alpha: float
    c2: float
    C2: float
    H2_t0: float = math.inf

    @property
    def shift(self) -> float:
        """``3E / b1``, the offset of the lower-bound clock (infinite when degenerate)."""
        return 3 * self.E / self.b1 if self.b1 > 0 else math.inf

    def to_dict(self) -> dict:
        return {k: (v if math.isfinite(v) else None) for k, v in asdict(self).items()}


def envelope_constants(s_t0: Spectrum, t0: float) -> DecayEnvelope:
    """Constants of the envelopes anchored at the sample ``s_t0`` taken at ``t0``.

    ``c2`` and ``C2`` describe the closed form of the ``F_2`` lower bound:
    for ``alpha > 1`` it reads ``c2 / ((tau + a)**alpha + C2)``, for
    ``alpha == 1`` it reads ``c2 / ((tau + a) * (log(tau + a) + C2))``, with
    ``a = 3E / b1``.  :func:`lower_bound_F2` evaluates the exact majorant,
    which is never weaker.
    """
    F1 = s_t0.F(1)
    if not F1 > 0:
        raise EnvelopeError("F_1 vanishes at the anchor; choose a positive anchor time")
    if t0 < 0:
        raise EnvelopeError("anchor time must be non-negative")
    E = energy(s_t0)
    deficit = 1.0 - F1
    c1 = math.sqrt(3 * E) * deficit
    b1 = 2 * F1 * deficit**2
    alpha = max(1.0, 3 * E / (16 * F1))
    F2 = s_t0.F(2)
    H2 = 1.0 / F2 if F2 > 0 else math.inf
    c2 = C2 = math.nan
    if b1 > 0 and math.isfinite(H2):
        a = 3 * E / b1
        if abs(alpha - 1.0) <= ALPHA_LOG_EPS:
            c2 = 0.5
            C2 = H2 / (2 * a) - math.log(a)
        else:
            # H_2 <= K1 (tau+a)^alpha - 2 (tau+a)/(alpha-1); drop the negative part
            K1 = (2 * a / (alpha - 1) + H2) / a**alpha
            c2 = 1.0 / K1
            C2 = 0.0
    return DecayEnvelope(t0, E, F1, c1, b1, alpha, c2, C2, H2)


def upper_bound_deficit(env: DecayEnvelope, t: float) -> float:
    if t < env.t0:
        raise EnvelopeError(f"t = {t} precedes the anchor {env.t0}")
    if env.c1 == 0:
        return 0.0
    return env.c1 / math.sqrt(env.b1 * (t - env.t0) + 3 * env.E)


def _growth_integral(tau: float, a: float, alpha: float) -> float:
    """``int_0^tau ((tau + a) / (s + a))**alpha ds`` in closed form."""
    T = tau + a
    eps = 1.0 - alpha
    ratio = math.log(T / a)
    if abs(eps) <= ALPHA_LOG_EPS:
        return T * ratio
    return T**alpha * a**eps * math.expm1(eps * ratio) / eps


def h2_majorant(env: DecayEnvelope, t: float, H2_t0: float) -> float:
    """Upper bound on ``H_2(t)`` from the integrating factor and ``L_2 <= 2``."""
    if t < env.t0:
        raise EnvelopeError(f"t = {t} precedes the anchor {env.t0}")
    if not (H2_t0 > 0 and math.isfinite(H2_t0)):
        raise EnvelopeError("H2_t0 must be positive and finite")
    if env.b1 <= 0:
        raise EnvelopeError("degenerate envelope (b1 = 0) has no F_2 lower bound")
    tau = t - env.t0
    a = env.shift
    growth = ((tau + a) / a) ** env.alpha
    return 2.0 * _growth_integral(tau, a, env.alpha) + growth * H2_t0


def lower_bound_F2(env: DecayEnvelope, t: float, H2_t0: float) -> float:
    return 1.0 / h2_majorant(env, t, H2_t0)


def gamma_n(c: float, n: int) -> float:
    """Decay coefficient of ``U_n`` under the hypothesis ``1 - F_1 <= c/(t + C)``."""
    if n < 2:
        raise EnvelopeError("gamma_n is defined for n >= 2")
    extra = 1 / math.sqrt(n + 1) + 2 / math.sqrt(2) if n > 2 else 0.0
    return 2 * c / math.sqrt(n) * (1 / math.sqrt(n + 2) + extra)


def admissible_n(c: float, n_max: int = 10_000) -> int:
    """Smallest ``n >= 3`` with ``gamma_n(c, n) < 1``.

    ``gamma_n`` decreases for ``n >= 3``, so every larger ``n`` qualifies too.
    Row 2 has no indicator terms and is not part of that tail.
    """
    for n in range(3, n_max + 1):
        if gamma_n(c, n) < 1:
            return n
    raise EnvelopeError(f"no admissible n <= {n_max} for c = {c}")


def lower_bound_Fn(c: float, C: float, n: int, Fn_t0: float, t: float) -> float:
    """Conditional lower bound on ``F_n(t)`` with the anchor shifted to 0.

    Uses ``G_n(0) = C**gamma_n F_n(0)`` in the initial-value term.
    """
    g = gamma_n(c, n)
    if g >= 1:
        raise EnvelopeError(f"n = {n} is not large enough: gamma_n = {g:.6g} >= 1")
    if not Fn_t0 > 0:
        raise EnvelopeError("Fn_t0 must be positive")
    if t < 0 or C <= 0:
        raise EnvelopeError("need t >= 0 and C > 0")
    T = t + C
    growth = 4.0 / (n * (1 - g)) * (T - C ** (1 - g) * T**g)
    return 1.0 / (growth + T**g / (C**g * Fn_t0))


def fit_decay_exponent(traj: Trajectory, n: int, window: tuple[float, float]) -> float:
    """Least-squares slope of ``log F_n`` (``log(1 - F_1)`` for ``n = 1``) against ``log t``."""
    t = traj.times
    y = 1.0 - traj.column(1) if n == 1 else traj.column(n)
    lo, hi = window
    m = (t >= lo) & (t <= hi) & (t > 0)
    if m.sum() < 4:
        raise EnvelopeError(f"need at least 4 samples in {window}, found {int(m.sum())}")
    if np.any(y[m] <= 0):
        raise EnvelopeError(f"F_{n} is not positive on {window}")
    return float(np.polyfit(np.log(t[m]), np.log(y[m]), 1)[0])


@dataclass
class Violation:
    t: float
    kind: str
    lhs: float
    rhs: float


@dataclass
class EnvelopeReport:
    envelope: DecayEnvelope
    tolerance: float
    checked: int
    violations: list[Violation] = field(default_factory=list)
    fit: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "constants": self.envelope.to_dict(),
            "tolerance": self.tolerance,
            "samples_checked": self.checked,
            "violations": [asdict(v) for v in self.violations],
            "fit": self.fit,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def default_tolerance(traj: Trajectory) -> float:
    return max(1e-9, 10 * max(traj.max_mass_drift, traj.error_estimate))


def check_envelopes(traj: Trajectory, env: DecayEnvelope, tol: float | None = None) -> EnvelopeReport:
    """Check every sample at or after the anchor against the three bounds."""
    anchor = [s for s in traj.samples if s.t == env.t0]
    if not anchor or anchor[0].spectrum.F(1) != env.F1_t0:
        raise EnvelopeError(f"no trajectory sample matches the envelope anchor t0 = {env.t0}")
    tol = default_tolerance(traj) if tol is None else tol
    rep = EnvelopeReport(env, tol, 0)
    lower = env.b1 > 0 and math.isfinite(env.H2_t0)
    for s in traj.samples:
        if s.t < env.t0:
            continue
        rep.checked += 1
        deficit = 1.0 - s.spectrum.F(1)
        ub = upper_bound_deficit(env, s.t)
        if deficit > ub + tol:
            rep.violations.append(Violation(s.t, "deficit_upper", deficit, ub))
        if lower:
            lb = lower_bound_F2(env, s.t, env.H2_t0)
            if s.spectrum.F(2) < lb - tol:
                rep.violations.append(Violation(s.t, "F2_lower", s.spectrum.F(2), lb))
        tail = s.spectrum.values[1:]
        if tail.size and tail.max() > deficit + tol:
            rep.violations.append(Violation(s.t, "Fk_mass", float(tail.max()), deficit))
    return rep
