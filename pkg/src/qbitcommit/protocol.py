"""The three protocol phases as plain functions over explicit records.

Initialization (Bob emits ``N`` random protocol states), commitment (Alice
measures each detected photon on arrival and announces arrival times) and
opening (Alice reveals ``c`` and her outcome string). Time is the pulse
index divided by the repetition rate; the propagation delay is a constant
offset and is dropped.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .adversary import AttackModel, discrimination_basis, reduce_attack
from .channels import NoiseParams, arrived_state, depolarizing, measurement_channel
from .link import DARK, LinkParams, PulseSchedule, transmit
from .quantum import (
    DensityMatrix,
    KrausChannel,
    ValidationError,
    apply_channel,
    identity_channel,
    measure_probability,
    observable_basis,
)

TRANSCRIPT_FORMAT = "qbitcommit-transcript"
TRANSCRIPT_VERSION = 1


class ProtocolError(RuntimeError):
    """A party deviated from the message contract."""


@dataclass(frozen=True)
class Honest:
    commitment: int

    def __post_init__(self):
        if self.commitment not in (0, 1):
            raise ValidationError("commitment must be 0 or 1")

    def describe(self) -> str:
        return f"honest({self.commitment})"


Strategy = Union[Honest, AttackModel]


@dataclass(frozen=True)
class ProtocolConfig:
    theta: float = math.pi / 4
    phi: float = 0.0
    n_pulses: int = 10_000
    noise: NoiseParams = field(default_factory=NoiseParams)
    link: LinkParams = field(default_factory=LinkParams)
    timing: tuple[int, int, int] = (0, 1, 2)

    def __post_init__(self):
        if not 0.0 < self.theta < math.pi / 2:
            raise ValidationError(f"theta must lie in (0, pi/2), got {self.theta!r}")
        if self.n_pulses < 1:
            raise ValidationError("n_pulses must be at least 1")
        t0, t1, t2 = self.timing
        if not t0 < t1 < t2:
            raise ValidationError("timing markers must satisfy T0 < T1 < T2")


@dataclass(frozen=True)
class Arrival:
    """A detection event together with the photon's physical state."""

    pulse_index: int
    time: float
    kind: str
    outcome: Optional[int]
    state: Optional[DensityMatrix]


@dataclass(frozen=True)
class CommitRecord:
    """Alice's private record after the commitment phase.

    ``outcomes[c]`` is the string she would open for commitment ``c``; an
    honest party holds only her own entry.
    """

    indices: np.ndarray
    arrival_times: np.ndarray
    outcomes: dict
    strategy: Strategy


@dataclass(frozen=True)
class Opening:
    commitment: int
    indices: np.ndarray
    outcomes: np.ndarray


@dataclass
class SessionTranscript:
    bob_bits: np.ndarray
    emission_times: np.ndarray
    announced_indices: np.ndarray
    arrival_times: np.ndarray
    outcomes: np.ndarray
    claimed_commitment: int
    strategy_tag: str
    theta: float = math.pi / 4
    phi: float = 0.0

    @property
    def n(self) -> int:
        return len(self.outcomes)

    @property
    def n_pulses(self) -> int:
        return len(self.bob_bits)

    def to_json(self) -> str:
        doc = {
            "format": TRANSCRIPT_FORMAT,
            "version": TRANSCRIPT_VERSION,
            "theta": self.theta,
            "phi": self.phi,
            "strategy": self.strategy_tag,
            "claimed_commitment": int(self.claimed_commitment),
            "bob_bits": "".join(str(int(b)) for b in self.bob_bits),
            "emission_times": [float(t) for t in self.emission_times],
            "announced_indices": [int(k) for k in self.announced_indices],
            "arrival_times": [float(t) for t in self.arrival_times],
            "outcomes": "".join(str(int(r)) for r in self.outcomes),
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "SessionTranscript":
        doc = json.loads(text)
        if doc.get("format") != TRANSCRIPT_FORMAT:
            raise ValidationError("not a transcript document")
        if doc.get("version") != TRANSCRIPT_VERSION:
            raise ValidationError(f"unsupported transcript version {doc.get('version')!r}")
        return cls(
            bob_bits=np.array([int(ch) for ch in doc["bob_bits"]], dtype=np.int8),
            emission_times=np.array(doc["emission_times"], dtype=float),
            announced_indices=np.array(doc["announced_indices"], dtype=np.int64),
            arrival_times=np.array(doc["arrival_times"], dtype=float),
            outcomes=np.array([int(ch) for ch in doc["outcomes"]], dtype=np.int8),
            claimed_commitment=int(doc["claimed_commitment"]),
            strategy_tag=doc["strategy"],
            theta=float(doc["theta"]),
            phi=float(doc["phi"]),
        )

    def validate(self) -> None:
        if len(self.announced_indices) != len(self.outcomes):
            raise ValidationError("outcome list is not aligned with announced arrivals")
        if self.n > self.n_pulses:
            raise ValidationError("more outcomes than emitted pulses")
        if len(self.arrival_times) > 1 and np.any(np.diff(self.arrival_times) < 0):
            raise ValidationError("arrival times must be ascending")
        idx = self.announced_indices
        if len(np.unique(idx)) != len(idx):
            raise ValidationError("announced indices are not injective")
        if len(idx) and (idx.min() < 0 or idx.max() >= self.n_pulses):
            raise ValidationError("announced index outside the pulse range")


def bob_initialize(cfg: ProtocolConfig, rng: np.random.Generator) -> tuple[np.ndarray, PulseSchedule]:
    """Draw Bob's secret bits and the emission schedule."""
    bits = rng.integers(0, 2, size=cfg.n_pulses, dtype=np.int8)
    return bits, PulseSchedule.regular(bits, cfg.link.f_rep)


def arrival_states(cfg: ProtocolConfig) -> tuple[DensityMatrix, DensityMatrix]:
    """States of ``|0>`` and ``|1>`` photons after preparation and transmission noise."""
    return tuple(arrived_state(b, cfg.noise, cfg.theta, cfg.phi) for b in (0, 1))


def attach_states(events, schedule: PulseSchedule, cfg: ProtocolConfig) -> list[Arrival]:
    states = arrival_states(cfg)
    out = []
    for e in events:
        state = None if e.kind == DARK else states[int(schedule.bits[e.pulse_index])]
        out.append(Arrival(e.pulse_index, e.time, e.kind, e.outcome, state))
    return out


def extra_noise_channel(params: NoiseParams, extra: float) -> KrausChannel:
    """Depolarizing step that raises the link's total white noise by ``extra``.

    Totals compose additively like the stage probabilities, so on top of
    ``p_d`` the step strength is ``extra / (1 - p_d)``.
    """
    if extra == 0.0:
        return identity_channel()
    if params.exact_depolarizing:
        return depolarizing(extra)
    room = 1.0 - params.p_d
    if extra > room + 1e-12:
        raise ValidationError("extra noise exceeds 1 - p_d")
    return depolarizing(min(1.0, extra / room))


class _Measurer:
    """Outcome-0 probabilities of one measurement, cached per physical state."""

    def __init__(self, pre: KrausChannel, basis):
        self.pre = pre
        self.basis = basis
        self._cache: dict[int, float] = {}

    def p0(self, state: DensityMatrix) -> float:
        key = id(state)
        if key not in self._cache:
            self._cache[key] = measure_probability(apply_channel(self.pre, state), self.basis, 0)
        return self._cache[key]


def _honest_measurer(c: int, cfg: ProtocolConfig, extra: float = 0.0) -> _Measurer:
    pre = measurement_channel(c, cfg.noise, cfg.theta, cfg.phi).after(extra_noise_channel(cfg.noise, extra))
    return _Measurer(pre, observable_basis(c, cfg.theta, cfg.phi))


def _cheat_measurer(attack: AttackModel, cfg: ProtocolConfig) -> _Measurer:
    extra = attack.delta_pd if attack.kind == "added_noise" else 0.0
    return _Measurer(extra_noise_channel(cfg.noise, extra), discrimination_basis(cfg.theta, cfg.phi))


def _sample(measurer: _Measurer, arrivals: list[Arrival], u: np.ndarray) -> np.ndarray:
    out = np.empty(len(arrivals), dtype=np.int8)
    for i, a in enumerate(arrivals):
        if a.state is None:
            out[i] = a.outcome
        else:
            out[i] = 0 if u[i] < measurer.p0(a.state) else 1
    return out


def alice_commit(strategy: Strategy, arrivals: list[Arrival], cfg: ProtocolConfig, rng: np.random.Generator) -> CommitRecord:
    """Measure every detected photon on arrival and announce arrival times.

    Dark clicks yield the index of the detector that fired. Memory attacks
    defer the observable choice, so their record holds both candidate
    outcome strings.
    """
    n = len(arrivals)
    u = rng.random((n, 3))
    indices = np.array([a.pulse_index for a in arrivals], dtype=np.int64)
    times = np.array([a.time for a in arrivals], dtype=float)

    if isinstance(strategy, Honest):
        c = strategy.commitment
        outcomes = {c: _sample(_honest_measurer(c, cfg), arrivals, u[:, 1])}
        return CommitRecord(indices, times, outcomes, strategy)

    attack = reduce_attack(strategy)
    attack.check_against(cfg.noise)
    if attack.kind in ("breidbart", "added_noise"):
        r = _sample(_cheat_measurer(attack, cfg), arrivals, u[:, 1])
        return CommitRecord(indices, times, {0: r, 1: r}, strategy)

    stored = {c: _sample(_honest_measurer(c, cfg, attack.pd_dt), arrivals, u[:, 1 + c]) for c in (0, 1)}
    if attack.kind == "memory":
        return CommitRecord(indices, times, stored, strategy)

    immediate = _sample(_cheat_measurer(attack.fallback, cfg), arrivals, u[:, 1])
    keep = u[:, 0] < attack.nu
    outcomes = {c: np.where(keep, stored[c], immediate) for c in (0, 1)}
    return CommitRecord(indices, times, outcomes, strategy)


def alice_open(record: CommitRecord, claimed_c: int, indices: Optional[np.ndarray] = None) -> Opening:
    """Reveal ``claimed_c`` with the outcome string aligned to the announced arrivals.

    ``indices``, when given, is the index set Alice claims to open; it must
    equal the announced one.
    """
    if claimed_c not in record.outcomes:
        raise ProtocolError(f"record holds no outcomes for commitment {claimed_c}")
    if indices is not None:
        if set(int(k) for k in indices) != set(int(k) for k in record.indices):
            raise ProtocolError("opened index set differs from the announced arrivals")
    return Opening(claimed_c, record.indices.copy(), np.asarray(record.outcomes[claimed_c]).copy())


def _strategy_tag(strategy: Strategy) -> str:
    return strategy.describe()


@dataclass(frozen=True)
class CommitPhase:
    """State after the commitment phase: Bob's secret and Alice's record."""

    bob_bits: np.ndarray
    schedule: PulseSchedule
    record: CommitRecord


def commit_phase(cfg: ProtocolConfig, strategy: Strategy, rng: np.random.Generator) -> CommitPhase:
    """Initialization, link and commitment."""
    bits, schedule = bob_initialize(cfg, rng)
    events = transmit(schedule, cfg.link, rng)
    arrivals = attach_states(events, schedule, cfg)
    return CommitPhase(bits, schedule, alice_commit(strategy, arrivals, cfg, rng))


def open_phase(phase: CommitPhase, claimed_c: int, cfg: ProtocolConfig) -> SessionTranscript:
    """Alice opens ``claimed_c``; raises :class:`ProtocolError` if she cannot."""
    opening = alice_open(phase.record, claimed_c)
    return SessionTranscript(
        bob_bits=phase.bob_bits,
        emission_times=phase.schedule.times,
        announced_indices=opening.indices,
        arrival_times=phase.record.arrival_times,
        outcomes=opening.outcomes,
        claimed_commitment=claimed_c,
        strategy_tag=_strategy_tag(phase.record.strategy),
        theta=cfg.theta,
        phi=cfg.phi,
    )


def run_session(
    cfg: ProtocolConfig,
    strategy: Strategy,
    rng: np.random.Generator,
    open_as: Optional[int] = None,
) -> SessionTranscript:
    """A complete session.

    An honest party opens her own commitment; a cheater opens ``open_as``
    (default 0), chosen after the commitment phase.
    """
    phase = commit_phase(cfg, strategy, rng)
    claim = strategy.commitment if isinstance(strategy, Honest) else (0 if open_as is None else open_as)
    return open_phase(phase, claim, cfg)


def reopen(transcript: SessionTranscript, claimed_c: int) -> SessionTranscript:
    """Same outcome string presented as a commitment to ``claimed_c``."""
    return SessionTranscript(
        bob_bits=transcript.bob_bits,
        emission_times=transcript.emission_times,
        announced_indices=transcript.announced_indices,
        arrival_times=transcript.arrival_times,
        outcomes=transcript.outcomes,
        claimed_commitment=claimed_c,
        strategy_tag=transcript.strategy_tag,
        theta=transcript.theta,
        phi=transcript.phi,
    )
