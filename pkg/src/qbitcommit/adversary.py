"""Strategies of a cheating committer.

A cheater who must measure on arrival uses the minimum-error measurement
between ``|0>`` and ``|1>`` and later opens whichever commitment she likes.
With a (noisy, possibly bounded) quantum memory she can instead delay the
honest measurement, paying with extra white noise ``p_d(dt)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import (
    BITS,
    ConditionalProbs,
    NoiseParams,
    arrived_state,
    closed_form_cond_probs,
)
from .quantum import MeasurementBasis, PureState, ValidationError, measure_probability


def helstrom_error(theta: float) -> float:
    """Minimum error for equiprobable ``|0>``/``|1>`` with ``<0|1> = cos theta``."""
    return 0.5 * (1.0 - math.sin(theta))


def discrimination_vectors(theta: float, phi: float = 0.0) -> tuple[PureState, PureState]:
    """Orthonormal pair in the span of ``|0>``, ``|1>`` sharing their bisector.

    The first vector sits on the ``|0>`` side of the bisector (outcome 0).
    """
    phase = np.exp(1j * phi)
    lo = theta / 2.0 - math.pi / 4.0
    hi = theta / 2.0 + math.pi / 4.0
    return (
        PureState(complex(math.cos(lo)), phase * math.sin(lo)),
        PureState(complex(math.cos(hi)), phase * math.sin(hi)),
    )


def discrimination_basis(theta: float, phi: float = 0.0) -> MeasurementBasis:
    """Minimum-error (Helstrom) measurement; Breidbart basis at ``theta = pi/4``."""
    t0, t1 = discrimination_vectors(theta, phi)
    return MeasurementBasis.from_states(t0, t1)


def cheating_cond_probs(
    params: NoiseParams,
    theta: float,
    phi: float = 0.0,
    *,
    added_noise: float = 0.0,
) -> ConditionalProbs:
    """Statistics ``p_ch(r|b)`` of the discrimination measurement on arrived states.

    The cheater holds one outcome string, so the same rows are used for
    either claimed commitment: ``table[c, r, b] = p_ch(r|b)`` for both ``c``.
    ``added_noise`` is extra white noise the cheater applies herself; it adds
    to the link's total ``p_d``.
    """
    basis = discrimination_basis(theta, phi)
    noisy = params.with_extra_depolarizing(added_noise) if added_noise else params
    t = np.zeros((2, 2, 2))
    for b in BITS:
        p0 = measure_probability(arrived_state(b, noisy, theta, phi), basis, 0)
        t[:, 0, b] = p0
        t[:, 1, b] = 1.0 - p0
    return ConditionalProbs(t)


def optimal_added_noise(p_d: float) -> float:
    """White noise minimising ``<S(honest || cheat)>``: ``(1 - 1/sqrt 2)(1 - p_d)``."""
    if not 0.0 <= p_d <= 1.0:
        raise ValidationError(f"p_d must lie in [0, 1], got {p_d!r}")
    return (1.0 - 1.0 / math.sqrt(2.0)) * (1.0 - p_d)


def memory_attack_probs(params: NoiseParams, pd_dt: float, theta: float, phi: float = 0.0) -> ConditionalProbs:
    """Honest-observable table after storage: total white noise ``p_d + p_d(dt)``."""
    if pd_dt < 0.0 or params.p_d + pd_dt > 1.0 + 1e-12:
        raise ValidationError(f"p_d(dt) must lie in [0, 1 - p_d], got {pd_dt!r}")
    return closed_form_cond_probs(params.with_extra_depolarizing(pd_dt), theta, phi)


def bounded_memory_probs(nu: float, honest: ConditionalProbs, cheat: ConditionalProbs) -> ConditionalProbs:
    """``nu * honest + (1 - nu) * cheat``, entrywise."""
    if not 0.0 <= nu <= 1.0:
        raise ValidationError(f"nu must lie in [0, 1], got {nu!r}")
    return ConditionalProbs.mixture(nu, honest, cheat)


KINDS = ("breidbart", "added_noise", "memory", "bounded_memory", "nondemolition")


@dataclass(frozen=True)
class AttackModel:
    """A cheating strategy.

    ``breidbart``        discrimination measurement on arrival;
    ``added_noise``      same, after adding white noise ``delta_pd``;
    ``memory``           store every photon, measure ``C_c`` after the opening
                         choice with extra noise ``pd_dt``;
    ``bounded_memory``   store a fraction ``nu``; measure the rest with
                         ``fallback`` (an immediate strategy);
    ``nondemolition``    non-demolition detection succeeding with ``p_nd``;
                         see :func:`nondemolition_reduction`.
    """

    kind: str
    delta_pd: float = 0.0
    pd_dt: float = 0.0
    nu: float = 1.0
    p_nd: float = 1.0
    fallback: Optional["AttackModel"] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown attack kind {self.kind!r}")
        for name in ("delta_pd", "pd_dt", "nu", "p_nd"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {v!r}")
        if self.fallback is not None and self.fallback.kind not in ("breidbart", "added_noise"):
            raise ValidationError("fallback must be an immediate-measurement attack")

    @classmethod
    def breidbart(cls) -> "AttackModel":
        return cls("breidbart")

    @classmethod
    def added_noise(cls, delta_pd: float) -> "AttackModel":
        return cls("added_noise", delta_pd=delta_pd)

    @classmethod
    def memory(cls, pd_dt: float) -> "AttackModel":
        return cls("memory", pd_dt=pd_dt)

    @classmethod
    def bounded_memory(cls, nu: float, pd_dt: float, fallback: "AttackModel | None" = None) -> "AttackModel":
        return cls("bounded_memory", nu=nu, pd_dt=pd_dt, fallback=fallback or cls.breidbart())

    @classmethod
    def nondemolition(cls, p_nd: float, pd_dt: float = 0.0, fallback: "AttackModel | None" = None) -> "AttackModel":
        return cls("nondemolition", p_nd=p_nd, pd_dt=pd_dt, fallback=fallback or cls.breidbart())

    def check_against(self, params: NoiseParams) -> None:
        """Raise if the extra noise would push the total above 1."""
        room = 1.0 - params.p_d + 1e-12
        if self.delta_pd > room or self.pd_dt > room:
            raise ValidationError(f"extra noise exceeds 1 - p_d = {1.0 - params.p_d:.6g}")

    def describe(self) -> str:
        if self.kind == "breidbart":
            return "breidbart"
        if self.kind == "added_noise":
            return f"added_noise(delta_pd={self.delta_pd:g})"
        if self.kind == "memory":
            return f"memory(pd_dt={self.pd_dt:g})"
        inner = self.fallback.describe() if self.fallback else "breidbart"
        if self.kind == "bounded_memory":
            return f"bounded_memory(nu={self.nu:g}, pd_dt={self.pd_dt:g}, fallback={inner})"
        return f"nondemolition(p_nd={self.p_nd:g}, pd_dt={self.pd_dt:g}, fallback={inner})"


def nondemolition_reduction(p_nd: float, memory_model: AttackModel, fallback: AttackModel | None = None) -> AttackModel:
    """Rewrite an imperfect non-demolition attack as a bounded-memory attack.

    Photons whose arrival is registered non-destructively (probability
    ``p_nd``) go to the memory; the others are measured on the spot with the
    cheating observable. That is bounded memory with ``nu = p_nd``.
    """
    if memory_model.kind != "memory":
        raise ValidationError("memory_model must be a memory attack")
    if p_nd == 1.0:
        return memory_model
    fb = fallback or AttackModel.breidbart()
    if p_nd == 0.0:
        return fb
    return AttackModel.bounded_memory(p_nd, memory_model.pd_dt, fb)


def reduce_attack(attack: AttackModel) -> AttackModel:
    """Normal form: non-demolition attacks become bounded-memory ones."""
    if attack.kind == "nondemolition":
        return nondemolition_reduction(attack.p_nd, AttackModel.memory(attack.pd_dt), attack.fallback)
    if attack.kind == "bounded_memory" and attack.nu in (0.0, 1.0):
        return AttackModel.memory(attack.pd_dt) if attack.nu == 1.0 else attack.fallback
    return attack


def attack_cond_probs(attack: AttackModel, params: NoiseParams, theta: float, phi: float = 0.0) -> ConditionalProbs:
    """A-priori table a verifier would see from ``attack``, per claimed ``c``."""
    attack.check_against(params)
    a = reduce_attack(attack)
    if a.kind == "breidbart":
        return cheating_cond_probs(params, theta, phi)
    if a.kind == "added_noise":
        return cheating_cond_probs(params, theta, phi, added_noise=a.delta_pd)
    if a.kind == "memory":
        return memory_attack_probs(params, a.pd_dt, theta, phi)
    stored = memory_attack_probs(params, a.pd_dt, theta, phi)
    return bounded_memory_probs(a.nu, stored, attack_cond_probs(a.fallback, params, theta, phi))
