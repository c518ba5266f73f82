"""Photon transmission and detection: pulse losses, detector efficiency and
dark counts.

Multi-photon pulses are neglected: a pulse carries one photon with
probability ``mu_photon``. ``p_dark`` is the per-gate probability that the
receiver registers a dark count, split evenly between its two detectors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional

import numpy as np

from .channels import BITS, ConditionalProbs
from .quantum import ValidationError

PHOTON = "photon"
DARK = "dark"


@dataclass(frozen=True)
class LinkParams:
    """Source, fibre and detector figures.

    ``alpha_abs`` is the base-10 attenuation exponent per km, so the
    transmission probability is ``10 ** (-alpha_abs * length_km)``.
    """

    f_rep: float = 1e6
    mu_photon: float = 0.1
    alpha_abs: float = 0.02
    length_km: float = 15.0
    eta_det: float = 0.2
    p_dark: float = 1e-6

    def __post_init__(self):
        for name in ("f_rep", "mu_photon", "alpha_abs", "length_km", "eta_det", "p_dark"):
            v = getattr(self, name)
            if not v >= 0.0:
                raise ValidationError(f"{name} must be non-negative, got {v!r}")
        for name in ("mu_photon", "eta_det", "p_dark"):
            if getattr(self, name) > 1.0:
                raise ValidationError(f"{name} must not exceed 1")
        if self.f_rep == 0.0:
            raise ValidationError("f_rep must be positive")
        if self.mu_photon > 0.2:
            warnings.warn(
                f"mu_photon = {self.mu_photon} is large; multi-photon pulses are not modelled",
                stacklevel=3,
            )

    @property
    def transmission(self) -> float:
        return t_link(self.alpha_abs, self.length_km)

    @property
    def detection_probability(self) -> float:
        """Probability that a pulse yields a photon detection, ``mu t eta``."""
        return self.mu_photon * self.transmission * self.eta_det


def t_link(alpha_abs: float, length_km: float) -> float:
    return min(1.0, max(0.0, 10.0 ** (-alpha_abs * length_km)))


def raw_rate(p: LinkParams) -> float:
    """Detected-photon rate ``f_rep mu t_link eta`` in counts per second."""
    return p.f_rep * p.mu_photon * p.transmission * p.eta_det


def dark_count_correction(p: LinkParams) -> float:
    """Error-rate excess from dark counts on matched rows, ``p_dark / (2 mu t eta)``."""
    denom = 2.0 * p.detection_probability
    if denom <= 0.0:
        raise ValidationError("dark-count correction undefined: mu * t_link * eta is zero")
    return p.p_dark / denom


def apply_dark_correction(cp: ConditionalProbs, delta: float) -> ConditionalProbs:
    """Add the dark-count correction to a conditional table.

    Matched rows (``c == b``) move by ``+delta`` on the wrong outcome and
    ``-delta`` on the right one. Crossed rows are pulled towards uniform by
    ``2 delta (1/2 - p)``, which vanishes for the uniform crossed rows of
    ``theta = pi/4``.
    """
    t = cp.table.copy()
    for c in BITS:
        for b in BITS:
            if c == b:
                t[c, 1 - c, b] += delta
                t[c, c, b] -= delta
            else:
                for r in BITS:
                    t[c, r, b] += 2.0 * delta * (0.5 - cp.table[c, r, b])
    return ConditionalProbs(np.clip(t, 0.0, 1.0))


@dataclass(frozen=True)
class PulseSchedule:
    """Bob's emissions: pulse ``k`` leaves at ``times[k]`` carrying ``|bits[k]>``."""

    bits: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        if len(self.bits) != len(self.times):
            raise ValidationError("bits and times must have equal length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValidationError("emission times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.bits)

    @classmethod
    def regular(cls, bits: Iterable[int], f_rep: float) -> "PulseSchedule":
        b = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.int8)
        return cls(b, np.arange(len(b)) / f_rep)


class DetectionEvent(NamedTuple):
    """A click at the receiver.

    ``outcome`` is the detector that fired for dark counts and ``None`` for
    photons, whose outcome depends on the receiver's measurement.
    """

    pulse_index: int
    time: float
    kind: str
    outcome: Optional[int] = None


def transmit(schedule: PulseSchedule, link: LinkParams, rng: np.random.Generator) -> list[DetectionEvent]:
    """Sample which pulses produce a click at the receiver.

    Per pulse: a photon is emitted with ``mu_photon``, survives the fibre
    with ``t_link`` and is detected with ``eta_det``. Otherwise each detector
    fires in the dark with ``p_dark / 2``; a single dark click is kept with
    the detector index as its outcome and double clicks are discarded.
    """
    n = len(schedule)
    u = rng.random((n, 5))
    photon = (u[:, 0] < link.mu_photon) & (u[:, 1] < link.transmission) & (u[:, 2] < link.eta_det)
    half_dark = 0.5 * link.p_dark
    d0 = (u[:, 3] < half_dark) & ~photon
    d1 = (u[:, 4] < half_dark) & ~photon
    dark = d0 ^ d1
    events = []
    for k in np.flatnonzero(photon | dark):
        t = float(schedule.times[k])
        if photon[k]:
            events.append(DetectionEvent(int(k), t, PHOTON))
        else:
            events.append(DetectionEvent(int(k), t, DARK, 0 if d0[k] else 1))
    return events


def format_events(events: Iterable[DetectionEvent]) -> Iterator[str]:
    """One ``pulse_index outcome kind`` line per event; ``-`` for unresolved outcomes."""
    yield "# pulse_index outcome kind"
    for e in events:
        outcome = "-" if e.outcome is None else str(e.outcome)
        yield f"{e.pulse_index} {outcome} {e.kind}"


def parse_events(lines: Iterable[str], f_rep: float) -> list[DetectionEvent]:
    events = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3 or parts[2] not in (PHOTON, DARK):
            raise ValidationError(f"line {lineno}: expected 'pulse_index outcome kind', got {line!r}")
        k = int(parts[0])
        outcome = None if parts[1] == "-" else int(parts[1])
        if outcome not in (None, 0, 1):
            raise ValidationError(f"line {lineno}: outcome must be 0, 1 or '-'")
        events.append(DetectionEvent(k, k / f_rep, parts[2], outcome))
    return events


def expected_detections(link: LinkParams, n_pulses: int) -> float:
    """Mean number of kept clicks over ``n_pulses`` pulses."""
    q = link.detection_probability
    h = 0.5 * link.p_dark
    single_dark = 2.0 * h * (1.0 - h)
    return n_pulses * (q + (1.0 - q) * single_dark)


def detection_sigma(link: LinkParams, n_pulses: int) -> float:
    q = link.detection_probability
    h = 0.5 * link.p_dark
    p = q + (1.0 - q) * 2.0 * h * (1.0 - h)
    return math.sqrt(n_pulses * p * (1.0 - p))
