"""Truncated discrete spectra, initial data and interaction sets.

A spectrum stores the masses ``F_1, ..., F_K`` carried by the integer
frequencies ``1..K`` at a time ``t``.  Arrays are 0-based, so ``values[i]``
is the mass at frequency ``i + 1``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MASS_TOL = 1e-9


class SpectrumError(ValueError):
    """Raised when a spectrum, initial datum or frequency set is invalid."""


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    time: float = 0.0
    mass_tol: float = MASS_TOL

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1:
            raise SpectrumError("spectrum values must be one-dimensional")
        if v.size < 2:
            raise SpectrumError(f"cutoff must be at least 2, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise SpectrumError("spectrum values must be finite")
        if np.any(v < 0):
            bad = int(np.argmin(v)) + 1
            raise SpectrumError(f"negative mass {v[bad - 1]!r} at frequency {bad}")
        if math.fsum(v) > 1.0 + self.mass_tol:
            raise SpectrumError(f"total mass {math.fsum(v)!r} exceeds 1")
        if self.time < 0:
            raise SpectrumError("time must be non-negative")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "time", float(self.time))

    @property
    def cutoff(self) -> int:
        return self.values.size

    def F(self, n: int) -> float:
        """Mass at frequency ``n``; zero outside ``1..cutoff``."""
        if 1 <= n <= self.cutoff:
            return float(self.values[n - 1])
        return 0.0

    def with_values(self, values, time: float) -> "Spectrum":
        return Spectrum(values, time, self.mass_tol)

    def support(self) -> list[int]:
        return [i + 1 for i in np.flatnonzero(self.values)]


@dataclass(frozen=True)
class InitialData:
    """``M1`` at frequency 1 plus a finite tail of ``(j, m_j)`` pairs."""

    M1: float
    tail: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        tail = []
        for j, m in self.tail:
            if isinstance(j, float) and not j.is_integer():
                raise SpectrumError(f"frequency {j!r} is not an integer")
            j = int(j)
            if j < 2:
                raise SpectrumError(f"tail frequency must be >= 2, got {j}")
            if m < 0:
                raise SpectrumError(f"negative mass {m!r} at frequency {j}")
            tail.append((j, float(m)))
        if self.M1 < 0:
            raise SpectrumError(f"negative M1 {self.M1!r}")
        object.__setattr__(self, "tail", tuple(tail))
        object.__setattr__(self, "M1", float(self.M1))

    @property
    def total_mass(self) -> float:
        return math.fsum([self.M1, *(m for _, m in self.tail)])

    @property
    def max_frequency(self) -> int:
        return max([1, *(j for j, _ in self.tail)])

    def weighted_tail_norm(self, r: float) -> float:
        return math.fsum(j**r * m for j, m in self.tail)

    @classmethod
    def from_dict(cls, d: dict) -> "InitialData":
        try:
            return cls(float(d["M1"]), tuple((j, float(m)) for j, m in d.get("tail", [])))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SpectrumError):
                raise
            raise SpectrumError(f"malformed initial data: {exc}") from exc

    def to_dict(self) -> dict:
        return {"M1": self.M1, "tail": [[j, m] for j, m in self.tail]}


def load_initial_data(path) -> InitialData:
    with open(path) as fh:
        return InitialData.from_dict(json.load(fh))


@dataclass(frozen=True)
class PlacedSpectrum:
    spectrum: Spectrum
    rescale: float = 1.0


def make_spectrum(init: InitialData, cutoff: int) -> PlacedSpectrum:
    """Place the Dirac weights of ``init`` onto integer bins ``1..cutoff``.

    The total mass is normalized to one; ``rescale`` is the factor the input
    masses were divided by.
    """
    if cutoff < 2:
        raise SpectrumError(f"cutoff must be at least 2, got {cutoff}")
    for j, _ in init.tail:
        if j > cutoff:
            raise SpectrumError(f"tail frequency {j} exceeds cutoff {cutoff}")
    total = init.total_mass
    if total <= 0:
        raise SpectrumError("initial data has zero mass; nothing to evolve")
    v = np.zeros(cutoff)
    v[0] = init.M1
    for j, m in init.tail:
        v[j - 1] += m
    if total != 1.0:
        v = v / total
    return PlacedSpectrum(Spectrum(v, 0.0), total)


def mass(s: Spectrum) -> float:
    return math.fsum(s.values)


def energy(s: Spectrum) -> float:
    return math.fsum(np.arange(1, s.cutoff + 1) * s.values)


# -- interaction sets ------------------------------------------------------


@dataclass(frozen=True)
class FrequencySet:
    elements: tuple[int, ...]
    window: int

    def __post_init__(self):
        els = tuple(sorted({int(e) for e in self.elements}))
        if any(e < 1 for e in els):
            raise SpectrumError("frequencies must be >= 1")
        if any(e > self.window for e in els):
            raise SpectrumError(f"frequencies must not exceed the window {self.window}")
        object.__setattr__(self, "elements", els)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)


def next_interaction_set(a: FrequencySet) -> FrequencySet:
    """All positive ``x + y - z`` with ``x, y, z`` in ``a``, clipped to the window."""
    if not a.elements:
        raise SpectrumError("interaction set must be non-empty")
    e = np.asarray(a.elements)
    sums = (e[:, None, None] + e[None, :, None] - e[None, None, :]).ravel()
    keep = sums[(sums >= 1) & (sums <= a.window)]
    return FrequencySet(tuple(np.unique(keep).tolist()), a.window)


def closure_set(a1: FrequencySet) -> FrequencySet:
    """Fixed point of :func:`next_interaction_set` within the window."""
    cur = next_interaction_set(a1)
    prev = a1
    while cur.elements != prev.elements:
        prev, cur = cur, next_interaction_set(cur)
    return cur


# -- serialization ---------------------------------------------------------


def spectrum_row(s: Spectrum) -> list[str]:
    return [repr(s.time), *(repr(float(x)) for x in s.values)]


def write_spectra_csv(path, spectra: Iterable[Spectrum]) -> None:
    spectra = list(spectra)
    K = spectra[0].cutoff if spectra else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *(f"F_{i}" for i in range(1, K + 1))])
        for s in spectra:
            w.writerow(spectrum_row(s))


def read_spectra_csv(path) -> list[Spectrum]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = [i for i, h in enumerate(header) if h.startswith("F_")]
    return [Spectrum([float(r[i]) for i in cols], float(r[0])) for r in body]


def spectrum_from_list(values: Sequence[float], time: float = 0.0, normalize: bool = False) -> Spectrum:
    v = np.asarray(values, dtype=float)
    if normalize:
        total = math.fsum(v)
        if total <= 0:
            raise SpectrumError("cannot normalize a zero spectrum")
        v = v / total
    return Spectrum(v, time)


def random_spectrum(rng: np.random.Generator, K: int, density: float = 0.6) -> Spectrum:
    """Unit-mass spectrum on ``1..K`` with a random support (never empty)."""
    v = rng.random(K) * (rng.random(K) < density)
    if not v.any():
        v[rng.integers(K)] = 1.0
    return spectrum_from_list(v, normalize=True)
