"""Noise channels of the optical link and the combined conditional-probability
table ``p_c(r|b)``.

Four channel families are provided (depolarizing, basis-dependent bit- and
phase-flip, transmission unitary) together with the staged
preparation -> transmission -> measurement pipeline ``E_cb``. The table is
available in closed form (:func:`closed_form_cond_probs`) and by brute-force
density-matrix propagation (:func:`numeric_cond_probs`); the two are kept
independent so that one can check the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .quantum import (
    IDENTITY,
    DensityMatrix,
    KrausChannel,
    ValidationError,
    apply_channel,
    compose,
    density_from_pure,
    measure_probability,
    observable_basis,
    protocol_state,
    state_one,
    state_one_perp,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

BITS = (0, 1)


def _check_probability(name: str, p: float, upper: float = 1.0) -> None:
    if not (0.0 <= p <= upper) or math.isnan(p):
        raise ValidationError(f"{name} must lie in [0, {upper}], got {p!r}")


def basis_sigma_x(basis_index: int, theta: float = math.pi / 4, phi: float = 0.0) -> np.ndarray:
    """Bit-flip operator of basis ``B_basis_index`` written in B0."""
    if basis_index == 0:
        return SIGMA_X.copy()
    one = state_one(theta, phi).vector
    one_perp = state_one_perp(theta, phi).vector
    return np.outer(one, one_perp.conj()) + np.outer(one_perp, one.conj())


def basis_sigma_z(basis_index: int, theta: float = math.pi / 4, phi: float = 0.0) -> np.ndarray:
    """Phase-flip operator of basis ``B_basis_index`` written in B0."""
    if basis_index == 0:
        return SIGMA_Z.copy()
    one = state_one(theta, phi).vector
    one_perp = state_one_perp(theta, phi).vector
    return np.outer(one, one.conj()) - np.outer(one_perp, one_perp.conj())


def depolarizing(p: float) -> KrausChannel:
    """White noise ``(1-p) rho + p I/2`` as four Pauli-weighted Kraus operators."""
    _check_probability("depolarizing p", p)
    w0 = math.sqrt(max(0.0, 1.0 - 0.75 * p))
    w = math.sqrt(p / 4.0)
    return KrausChannel([w0 * IDENTITY, w * SIGMA_X, w * SIGMA_Y, w * SIGMA_Z])


def _pauli_flip(op: np.ndarray, p: float) -> KrausChannel:
    return KrausChannel([math.sqrt(1.0 - p) * IDENTITY, math.sqrt(p) * op])


def bit_flip(
    basis_index: int,
    p: float,
    theta: float = math.pi / 4,
    phi: float = 0.0,
    *,
    extended: bool = False,
) -> KrausChannel:
    """``(1-p) rho + p X_b rho X_b`` with ``X_b`` the flip of basis ``B_b``.

    ``p`` is restricted to [0, 1/2] unless ``extended`` is set.
    """
    _check_probability("bit-flip p", p, 1.0 if extended else 0.5)
    return _pauli_flip(basis_sigma_x(basis_index, theta, phi), p)


def phase_flip(
    basis_index: int,
    p: float,
    theta: float = math.pi / 4,
    phi: float = 0.0,
    *,
    extended: bool = False,
) -> KrausChannel:
    """``(1-p) rho + p Z_b rho Z_b`` with ``Z_b`` the phase flip of ``B_b``."""
    _check_probability("phase-flip p", p, 1.0 if extended else 0.5)
    return _pauli_flip(basis_sigma_z(basis_index, theta, phi), p)


def unitary_matrix(u_alpha: float, u_lambda: float, u_mu: float) -> np.ndarray:
    ca, sa = math.cos(u_alpha), math.sin(u_alpha)
    return np.array(
        [
            [np.exp(1j * u_lambda) * ca, -np.exp(-1j * u_mu) * sa],
            [np.exp(1j * u_mu) * sa, np.exp(-1j * u_lambda) * ca],
        ],
        dtype=complex,
    )


def unitary_channel(u_alpha: float = 0.0, u_lambda: float = 0.0, u_mu: float = 0.0) -> KrausChannel:
    """Systematic rotation ``U rho U^dag``; ``sin^2(u_alpha)`` is the B0 error rate."""
    return KrausChannel([unitary_matrix(u_alpha, u_lambda, u_mu)])


@dataclass(frozen=True)
class NoiseParams:
    """Per-stage noise coefficients of the optical link.

    The three white-noise probabilities are merged additively into
    :attr:`p_d` (first-order composition). Setting ``exact_depolarizing``
    composes them exactly instead, ``1 - p_d = prod(1 - p_stage)``.
    """

    p_d_prep: float = 0.0
    p_d_trans: float = 0.0
    p_d_meas: float = 0.0
    p_b_prep: float = 0.0
    p_b_meas: float = 0.0
    p_p_prep: float = 0.0
    p_p_meas: float = 0.0
    u_alpha: float = 0.0
    u_lambda: float = 0.0
    u_mu: float = 0.0
    extended_domain: bool = False
    exact_depolarizing: bool = False

    def __post_init__(self):
        for name in ("p_d_prep", "p_d_trans", "p_d_meas"):
            _check_probability(name, getattr(self, name))
        flip_max = 1.0 if self.extended_domain else 0.5
        for name in ("p_b_prep", "p_b_meas", "p_p_prep", "p_p_meas"):
            _check_probability(name, getattr(self, name), flip_max)
        if not (0.0 <= self.u_alpha <= math.pi / 2):
            raise ValidationError(f"u_alpha must lie in [0, pi/2], got {self.u_alpha!r}")
        for name in ("u_lambda", "u_mu"):
            v = getattr(self, name)
            if not (0.0 <= v < 2 * math.pi):
                raise ValidationError(f"{name} must lie in [0, 2pi), got {v!r}")
        if self.p_d > 1.0 + 1e-12:
            raise ValidationError(f"total depolarizing probability {self.p_d!r} exceeds 1")

    @property
    def p_d(self) -> float:
        stages = (self.p_d_prep, self.p_d_trans, self.p_d_meas)
        if self.exact_depolarizing:
            return 1.0 - math.prod(1.0 - p for p in stages)
        return sum(stages)

    def joint_b(self) -> float:
        """Joint bit-flip coefficient ``1 - (1 - 2 p_b^m)(1 - 2 p_b^p)``."""
        return 1.0 - (1.0 - 2.0 * self.p_b_meas) * (1.0 - 2.0 * self.p_b_prep)

    def with_extra_depolarizing(self, extra: float) -> "NoiseParams":
        """Same link with ``extra`` white noise folded into the transmission stage."""
        _check_probability("extra depolarizing", extra)
        if self.exact_depolarizing:
            # 1 - p_total' = (1 - p_total)(1 - extra)
            trans = 1.0 - (1.0 - self.p_d_trans) * (1.0 - extra)
        else:
            trans = self.p_d_trans + extra
        return replace(self, p_d_trans=min(1.0, trans))

    @classmethod
    def white_noise(cls, p_d: float) -> "NoiseParams":
        return cls(p_d_trans=p_d)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


_COND_TOL = 1e-12


@dataclass(frozen=True)
class ConditionalProbs:
    """Table ``p_c(r|b)``; ``table[c, r, b]`` is the probability of outcome
    ``r`` when ``C_c`` is measured on a qubit prepared as ``|b>``."""

    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.shape != (2, 2, 2):
            raise ValidationError(f"table must have shape (2, 2, 2), got {t.shape}")
        if np.any(t < -_COND_TOL) or np.any(t > 1.0 + _COND_TOL):
            raise ValidationError("conditional probabilities must lie in [0, 1]")
        sums = t.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > _COND_TOL:
            raise ValidationError("rows p_c(*|b) must sum to 1")
        t = np.clip(t, 0.0, 1.0)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def __getitem__(self, key: tuple[int, int, int]) -> float:
        c, r, b = key
        return float(self.table[c, r, b])

    def row(self, c: int, b: int) -> np.ndarray:
        """Distribution ``(p_c(0|b), p_c(1|b))``."""
        return self.table[c, :, b].copy()

    def label_exchange(self) -> "ConditionalProbs":
        """Swap the labels 0 <-> 1 on all three indices."""
        return ConditionalProbs(self.table[::-1, ::-1, ::-1])

    def max_abs_diff(self, other: "ConditionalProbs") -> float:
        return float(np.max(np.abs(self.table - other.table)))

    def records(self) -> Iterator[tuple[int, int, int, float]]:
        for c in BITS:
            for b in BITS:
                for r in BITS:
                    yield c, r, b, float(self.table[c, r, b])

    @classmethod
    def from_rows(cls, rows: dict[tuple[int, int], tuple[float, float]]) -> "ConditionalProbs":
        t = np.zeros((2, 2, 2))
        for (c, b), (p0, p1) in rows.items():
            t[c, 0, b] = p0
            t[c, 1, b] = p1
        return cls(t)

    @classmethod
    def mixture(cls, weight: float, first: "ConditionalProbs", second: "ConditionalProbs") -> "ConditionalProbs":
        return cls(weight * first.table + (1.0 - weight) * second.table)


def ideal_cond_probs(theta: float) -> ConditionalProbs:
    """Noiseless table: ``p_0(0|0) = 1``, ``p_0(0|1) = cos^2 theta`` and mirror."""
    c2, s2 = math.cos(theta) ** 2, math.sin(theta) ** 2
    return ConditionalProbs.from_rows(
        {
            (0, 0): (1.0, 0.0),
            (0, 1): (c2, s2),
            (1, 0): (s2, c2),
            (1, 1): (0.0, 1.0),
        }
    )


def preparation_channel(b: int, params: NoiseParams, theta: float, phi: float = 0.0) -> KrausChannel:
    ext = params.extended_domain
    return compose(
        bit_flip(b, params.p_b_prep, theta, phi, extended=ext),
        phase_flip(b, params.p_p_prep, theta, phi, extended=ext),
    )


def measurement_channel(c: int, params: NoiseParams, theta: float, phi: float = 0.0) -> KrausChannel:
    ext = params.extended_domain
    return compose(
        bit_flip(c, params.p_b_meas, theta, phi, extended=ext),
        phase_flip(c, params.p_p_meas, theta, phi, extended=ext),
    )


def link_channel(params: NoiseParams) -> KrausChannel:
    """Merged white noise after the transmission unitary: ``E_d o E_u``."""
    return compose(
        depolarizing(min(1.0, params.p_d)),
        unitary_channel(params.u_alpha, params.u_lambda, params.u_mu),
    )


def pipeline(c: int, b: int, params: NoiseParams, theta: float = math.pi / 4, phi: float = 0.0) -> KrausChannel:
    """Composite channel ``E_cb`` for measuring ``C_c`` on a ``|b>`` preparation.

    ``E_cb = E_b^m(c) o E_p^m(c) o E_d o E_u o E_b^p(b) o E_p^p(b)``.
    """
    if c not in BITS or b not in BITS:
        raise ValidationError("pipeline indices must be bits")
    return compose(
        measurement_channel(c, params, theta, phi),
        link_channel(params),
        preparation_channel(b, params, theta, phi),
    )


def bloch_of_state(bit: int, theta: float, phi: float = 0.0) -> np.ndarray:
    """Bloch vector of ``|0>`` or ``|1>``."""
    if bit == 0:
        return np.array([0.0, 0.0, 1.0])
    s2 = math.sin(2.0 * theta)
    return np.array([s2 * math.cos(phi), s2 * math.sin(phi), math.cos(2.0 * theta)])


def rotation_of(u: np.ndarray) -> np.ndarray:
    """SO(3) matrix of ``rho -> U rho U^dag``: ``R_ij = Tr(s_i U s_j U^dag) / 2``."""
    paulis = (SIGMA_X, SIGMA_Y, SIGMA_Z)
    ud = u.conj().T
    return np.array([[0.5 * np.trace(si @ u @ sj @ ud).real for sj in paulis] for si in paulis])


def closed_form_cond_probs(params: NoiseParams, theta: float, phi: float = 0.0) -> ConditionalProbs:
    """Combined-noise table in closed form.

    ``p_c(0|b) = (1 + k m_c . R n_b) / 2`` with ``k = (1 - p_d)(1 - 2 p_b^m)(1 - 2 p_b^p)``,
    ``n_b`` the Bloch vector of ``|b>``, ``m_c`` that of the outcome-0 state
    of ``C_c`` and ``R`` the rotation of the transmission unitary. Phase
    flips leave every entry unchanged. For ``c = 0`` this reads
    ``p_0(0|0) = (1 + k cos 2a) / 2`` and
    ``p_0(0|1) = (1 + k [cos 2a cos 2theta - sin 2a sin 2theta cos(phi - lambda - mu)]) / 2``.
    """
    k = (1.0 - params.p_d) * (1.0 - 2.0 * params.p_b_meas) * (1.0 - 2.0 * params.p_b_prep)
    rot = rotation_of(unitary_matrix(params.u_alpha, params.u_lambda, params.u_mu))
    n = [bloch_of_state(b, theta, phi) for b in BITS]
    # C_1 assigns outcome 0 to |1_perp>, whose Bloch vector is -n_1
    m = [n[0], -n[1]]
    t = np.zeros((2, 2, 2))
    for c in BITS:
        for b in BITS:
            p0 = 0.5 * (1.0 + k * float(m[c] @ rot @ n[b]))
            t[c, 0, b] = p0
            t[c, 1, b] = 1.0 - p0
    return ConditionalProbs(np.clip(t, 0.0, 1.0))


def numeric_cond_probs(params: NoiseParams, theta: float, phi: float = 0.0) -> ConditionalProbs:
    """Conditional table by propagating ``|b><b|`` through ``E_cb`` and
    applying the Born rule for ``C_c``."""
    t = np.zeros((2, 2, 2))
    for c in BITS:
        basis = observable_basis(c, theta, phi)
        for b in BITS:
            rho = density_from_pure(protocol_state(b, theta, phi))
            out = apply_channel(pipeline(c, b, params, theta, phi), rho)
            p0 = measure_probability(out, basis, 0)
            t[c, 0, b] = p0
            t[c, 1, b] = 1.0 - p0
    return ConditionalProbs(t)


def arrived_state(b: int, params: NoiseParams, theta: float, phi: float = 0.0) -> DensityMatrix:
    """State of a ``|b>`` photon right before the receiver's apparatus."""
    rho = density_from_pure(protocol_state(b, theta, phi))
    return apply_channel(compose(link_channel(params), preparation_channel(b, params, theta, phi)), rho)
