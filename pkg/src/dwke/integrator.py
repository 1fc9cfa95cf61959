"""Adaptive Dormand-Prince 5(4) integration of the truncated system."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from dwke import kernel
from dwke.spectrum import Spectrum, energy, mass

log = logging.getLogger(__name__)

# Dormand-Prince tableau (the system is autonomous, so the nodes are not needed)
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
FAC_MIN, FAC_MAX = 0.2, 5.0
# PI gains for an error estimate of order 5
PI_ALPHA, PI_BETA = 0.7 / 5, 0.4 / 5

COMPLETED = "completed"
STEP_UNDERFLOW = "step underflow"
BLOWUP = "numerical blowup"


class IntegratorError(ValueError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float
    rtol: float = 1e-10
    atol: float = 1e-13
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 10.0
    sample_every: float = 1.0
    positivity_floor: float = 1e-12
    threads: int = 1

    def __post_init__(self):
        if not self.t_end > 0:
            raise IntegratorError(f"t_end must be positive, got {self.t_end}")
        if not (self.rtol > 0 and self.atol > 0):
            raise IntegratorError("rtol and atol must be positive")
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise IntegratorError("need 0 < dt_min <= dt_init <= dt_max")
        if not self.sample_every > 0:
            raise IntegratorError("sample_every must be positive")
        if self.positivity_floor < 0:
            raise IntegratorError("positivity_floor must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "IntegratorConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise IntegratorError(f"unknown integrator options: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class Sample:
    t: float
    spectrum: Spectrum
    mass: float
    energy: float
    mass_drift: float
    energy_drift: float


@dataclass
class Trajectory:
    samples: list[Sample]
    config: IntegratorConfig
    reason: str
    accepted: int = 0
    rejected: int = 0
    positivity_rejections: int = 0
    clamped_mass: float = 0.0
    rhs_evals: int = 0
    error_estimate: float = 0.0
    backend: str = field(default_factory=lambda: kernel.BACKEND)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    def column(self, n: int) -> np.ndarray:
        """``F_n`` at every sample."""
        return np.array([s.spectrum.F(n) for s in self.samples])

    @property
    def max_mass_drift(self) -> float:
        return max(s.mass_drift for s in self.samples)

    @property
    def max_energy_drift(self) -> float:
        return max(s.energy_drift for s in self.samples)

    def summary(self) -> dict:
        return {
            "termination": self.reason,
            "accepted_steps": self.accepted,
            "rejected_steps": self.rejected,
            "positivity_rejections": self.positivity_rejections,
            "rhs_evaluations": self.rhs_evals,
            "clamped_mass": self.clamped_mass,
            "error_estimate": self.error_estimate,
            "samples": len(self.samples),
            "t_final": self.samples[-1].t,
            "max_mass_drift": self.max_mass_drift,
            "max_energy_drift": self.max_energy_drift,
            "backend": self.backend,
            "config": asdict(self.config),
        }

    def write_csv(self, path) -> None:
        K = self.samples[0].spectrum.cutoff
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *(f"F_{i}" for i in range(1, K + 1)), "mass", "energy", "mass_drift", "energy_drift"])
            for s in self.samples:
                w.writerow(
                    [repr(s.t), *(repr(float(x)) for x in s.spectrum.values)]
                    + [repr(s.mass), repr(s.energy), repr(s.mass_drift), repr(s.energy_drift)]
                )

    def write_summary(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2)


def read_trajectory_csv(path, config: IntegratorConfig | None = None) -> Trajectory:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    fcols = [i for i, h in enumerate(header) if h.startswith("F_")]
    idx = {h: i for i, h in enumerate(header)}
    samples = []
    for r in rows[1:]:
        t = float(r[0])
        samples.append(
            Sample(
                t,
                Spectrum([float(r[i]) for i in fcols], t),
                float(r[idx["mass"]]),
                float(r[idx["energy"]]),
                float(r[idx["mass_drift"]]),
                float(r[idx["energy_drift"]]),
            )
        )
    cfg = config or IntegratorConfig(t_end=max(samples[-1].t, 1e-300))
    return Trajectory(samples, cfg, "loaded")


def _make_sample(t, y, m0, e0) -> Sample:
    s = Spectrum(np.maximum(y, 0.0), t, mass_tol=1e-6)
    m, e = mass(s), energy(s)
    return Sample(t, s, m, e, abs(m - m0), abs(e - e0))


def integrate(s0: Spectrum, cfg: IntegratorConfig) -> Trajectory:
    """Integrate ``s0`` to ``cfg.t_end``, sampling every ``cfg.sample_every``.

    Steps that push any mass below ``-positivity_floor`` are rejected and
    retried at half the step; smaller negative excursions are clamped to 0
    and accumulated in ``Trajectory.clamped_mass``.  Samples between accepted
    steps are linear interpolants.
    """
    m0, e0 = mass(s0), energy(s0)
    t = s0.time
    t_end = t + cfg.t_end
    y = s0.values.copy()
    traj = Trajectory([_make_sample(t, y, m0, e0)], cfg, COMPLETED)

    def f(v):
        traj.rhs_evals += 1
        return kernel.rhs(v, threads=cfg.threads)

    next_sample = t + cfg.sample_every
    dt = min(cfg.dt_init, t_end - t)
    err_prev = 1e-4
    k1 = f(y)
    if not np.all(np.isfinite(k1)):
        traj.reason = BLOWUP
        return traj
    ks = np.empty((7, y.size))

    while t < t_end:
        if dt < cfg.dt_min:
            traj.reason = STEP_UNDERFLOW
            log.warning("step underflow at t=%g (dt=%g)", t, dt)
            break
        last = t + dt >= t_end
        if last:
            dt = t_end - t
        ks[0] = k1
        for i in range(1, 7):
            ks[i] = f(y + dt * (np.asarray(_A[i]) @ ks[:i]))
        y_new = y + dt * (_B5 @ ks)
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(ks))):
            traj.reason = BLOWUP
            log.warning("non-finite state at t=%g", t)
            break
        err_vec = dt * (_E @ ks)
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale))

        if err > 1.0:
            traj.rejected += 1
            dt *= max(FAC_MIN, SAFETY * err ** (-1 / 5))
            continue
        if np.any(y_new < -cfg.positivity_floor):
            traj.rejected += 1
            traj.positivity_rejections += 1
            dt *= 0.5
            continue
        neg = y_new < 0
        if np.any(neg):
            traj.clamped_mass += float(-y_new[neg].sum())
            log.debug("clamped %g of negative mass at t=%g", -y_new[neg].sum(), t + dt)
            y_new[neg] = 0.0

        t_new = t_end if last else t + dt
        tol = 1e-12 * max(1.0, abs(t_new))
        while next_sample <= t_new + tol:
            if abs(next_sample - t_new) <= tol:
                traj.samples.append(_make_sample(t_new, y_new, m0, e0))
            else:
                w = (next_sample - t) / dt
                traj.samples.append(_make_sample(next_sample, (1 - w) * y + w * y_new, m0, e0))
            next_sample += cfg.sample_every
        if last and traj.samples[-1].t < t_new - tol:
            traj.samples.append(_make_sample(t_new, y_new, m0, e0))
        traj.error_estimate += float(np.max(np.abs(err_vec)))

        t, y = t_new, y_new
        # FSAL: the 7th stage is the derivative at the new point
        k1 = ks[6].copy() if not neg.any() else f(y)
        traj.accepted += 1

        fac = SAFETY * max(err, 1e-10) ** (-PI_ALPHA) * err_prev**PI_BETA
        dt = min(cfg.dt_max, dt * min(FAC_MAX, max(FAC_MIN, fac)))
        err_prev = max(err, 1e-4)

    return traj
