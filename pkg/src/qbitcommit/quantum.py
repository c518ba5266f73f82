"""Single-qubit linear algebra: pure states, density matrices, Kraus channels
and projective measurements.

Everything is expressed in the computational basis ``B0 = {|0>, |0perp>}``.
The second protocol state and its orthogonal partner are

    |1>     = cos(theta)|0> + e^{i phi} sin(theta)|0perp>
    |1perp> = sin(theta)|0> - e^{i phi} cos(theta)|0perp>

so that ``<0|1> = cos(theta)`` is real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-10
PROJECTOR_TOL = 1e-10
NORM_TOL = 1e-12

IDENTITY = np.eye(2, dtype=complex)


class ValidationError(ValueError):
    """Raised when a state, channel or basis violates its invariants."""


@dataclass(frozen=True)
class PureState:
    """Normalised qubit vector ``amplitude0 |0> + amplitude1 |0perp>``."""

    amplitude0: complex
    amplitude1: complex

    def __post_init__(self):
        norm = abs(self.amplitude0) ** 2 + abs(self.amplitude1) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state is not normalised (|psi|^2 = {norm!r})")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amplitude0, self.amplitude1], dtype=complex)

    @classmethod
    def from_vector(cls, vec: Sequence[complex]) -> "PureState":
        return cls(complex(vec[0]), complex(vec[1]))


def state_zero() -> PureState:
    return PureState(1.0 + 0j, 0j)


def state_zero_perp() -> PureState:
    return PureState(0j, 1.0 + 0j)


def state_one(theta: float, phi: float = 0.0) -> PureState:
    return PureState(complex(math.cos(theta)), np.exp(1j * phi) * math.sin(theta))


def state_one_perp(theta: float, phi: float = 0.0) -> PureState:
    return PureState(complex(math.sin(theta)), -np.exp(1j * phi) * math.cos(theta))


def protocol_state(bit: int, theta: float, phi: float = 0.0) -> PureState:
    """|0> for ``bit == 0``, |1> for ``bit == 1``."""
    return state_zero() if bit == 0 else state_one(theta, phi)


def _eigenvalues_2x2(m: np.ndarray) -> tuple[float, float]:
    # Hermitian 2x2: eigenvalues are tr/2 +- sqrt((a-d)^2/4 + |b|^2)
    a = m[0, 0].real
    d = m[1, 1].real
    b = m[0, 1]
    half_tr = 0.5 * (a + d)
    disc = math.sqrt(0.25 * (a - d) ** 2 + abs(b) ** 2)
    return half_tr - disc, half_tr + disc


class DensityMatrix:
    """Immutable 2x2 Hermitian, unit-trace, positive semidefinite matrix."""

    __slots__ = ("_m",)

    def __init__(self, entries, *, validate: bool = True):
        m = np.array(entries, dtype=complex)
        if m.shape != (2, 2):
            raise ValidationError(f"density matrix must be 2x2, got shape {m.shape}")
        if validate:
            if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
                raise ValidationError("density matrix is not Hermitian")
            tr = np.trace(m)
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
            lo, _ = _eigenvalues_2x2(m)
            if lo < -PSD_TOL:
                raise ValidationError(f"density matrix has negative eigenvalue {lo!r}")
        m.setflags(write=False)
        self._m = m

    @property
    def entries(self) -> np.ndarray:
        return self._m

    def eigenvalues(self) -> tuple[float, float]:
        return _eigenvalues_2x2(self._m)

    def purity(self) -> float:
        return float(np.real(np.trace(self._m @ self._m)))

    def bloch_vector(self) -> np.ndarray:
        m = self._m
        return np.array([2 * m[0, 1].real, -2 * m[0, 1].imag, (m[0, 0] - m[1, 1]).real])

    def allclose(self, other: "DensityMatrix", atol: float = 1e-10) -> bool:
        return bool(np.allclose(self._m, other._m, atol=atol, rtol=0.0))

    def __repr__(self) -> str:
        return f"DensityMatrix({self._m.tolist()!r})"


def maximally_mixed() -> DensityMatrix:
    return DensityMatrix(IDENTITY / 2)


def density_from_pure(psi: PureState) -> DensityMatrix:
    v = psi.vector
    return DensityMatrix(np.outer(v, v.conj()))


class KrausChannel:
    """Completely positive trace-preserving map given by Kraus operators."""

    __slots__ = ("_ops",)

    def __init__(self, operators: Iterable, *, validate: bool = True):
        ops = np.array([np.asarray(k, dtype=complex) for k in operators])
        if ops.ndim != 3 or ops.shape[1:] != (2, 2) or len(ops) == 0:
            raise ValidationError("Kraus operators must be a non-empty list of 2x2 matrices")
        if validate:
            completeness = np.einsum("kji,kjl->il", ops.conj(), ops)
            if np.max(np.abs(completeness - IDENTITY)) > COMPLETENESS_TOL:
                raise ValidationError("Kraus operators do not satisfy sum K^dag K = I")
        ops.setflags(write=False)
        self._ops = ops

    @property
    def operators(self) -> np.ndarray:
        return self._ops

    def __len__(self) -> int:
        return len(self._ops)

    def __call__(self, rho: DensityMatrix) -> DensityMatrix:
        return apply_channel(self, rho)

    def after(self, first: "KrausChannel") -> "KrausChannel":
        """Channel ``self o first``: apply ``first``, then ``self``."""
        prods = np.einsum("aij,bjk->abik", self._ops, first._ops).reshape(-1, 2, 2)
        # drop numerically-zero operators produced by e.g. p = 0 weights
        keep = np.max(np.abs(prods), axis=(1, 2)) > 0.0
        return KrausChannel(prods[keep], validate=False)


def identity_channel() -> KrausChannel:
    return KrausChannel([IDENTITY])


def compose(*channels: KrausChannel) -> KrausChannel:
    """Composition in operator order: ``compose(A, B, C) = A o B o C``.

    The rightmost channel acts first.
    """
    if not channels:
        return identity_channel()
    out = channels[-1]
    for ch in reversed(channels[:-1]):
        out = ch.after(out)
    return out


def apply_channel(ch: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    ops = ch.operators
    out = np.einsum("kij,jl,kml->im", ops, rho.entries, ops.conj())
    # symmetrise away rounding so downstream validation sees an exact Hermitian
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out)


class MeasurementBasis:
    """Two-outcome projective measurement; ``projector0`` gives outcome 0."""

    __slots__ = ("projector0", "projector1")

    def __init__(self, projector0, projector1):
        p0 = np.array(projector0, dtype=complex)
        p1 = np.array(projector1, dtype=complex)
        for p in (p0, p1):
            if p.shape != (2, 2):
                raise ValidationError("projectors must be 2x2")
            if np.max(np.abs(p - p.conj().T)) > PROJECTOR_TOL:
                raise ValidationError("projector is not Hermitian")
            if np.max(np.abs(p @ p - p)) > PROJECTOR_TOL:
                raise ValidationError("projector is not idempotent")
        if np.max(np.abs(p0 + p1 - IDENTITY)) > PROJECTOR_TOL:
            raise ValidationError("projectors do not resolve the identity")
        p0.setflags(write=False)
        p1.setflags(write=False)
        self.projector0 = p0
        self.projector1 = p1

    @classmethod
    def from_states(cls, outcome0: PureState, outcome1: PureState) -> "MeasurementBasis":
        v0, v1 = outcome0.vector, outcome1.vector
        return cls(np.outer(v0, v0.conj()), np.outer(v1, v1.conj()))

    def projector(self, outcome: int) -> np.ndarray:
        if outcome not in (0, 1):
            raise ValidationError(f"outcome must be 0 or 1, got {outcome!r}")
        return self.projector0 if outcome == 0 else self.projector1


def observable_basis(c: int, theta: float, phi: float = 0.0) -> MeasurementBasis:
    """Measurement of the commitment observable ``C_c``.

    ``C_0`` reports 0 on |0> and 1 on |0perp>; ``C_1`` reports 1 on |1> and
    0 on |1perp>.
    """
    if c == 0:
        return MeasurementBasis.from_states(state_zero(), state_zero_perp())
    if c == 1:
        return MeasurementBasis.from_states(state_one_perp(theta, phi), state_one(theta, phi))
    raise ValidationError(f"observable index must be 0 or 1, got {c!r}")


def measure_probability(rho: DensityMatrix, basis: MeasurementBasis, outcome: int) -> float:
    """Born rule ``Tr(Pi_outcome rho)`` clipped to [0, 1]."""
    p = float(np.real(np.trace(basis.projector(outcome) @ rho.entries)))
    return min(1.0, max(0.0, p))


def born_sample(rho: DensityMatrix, basis: MeasurementBasis, rng: np.random.Generator) -> int:
    """Draw one measurement outcome using the caller's generator."""
    p0 = measure_probability(rho, basis, 0)
    return 0 if rng.random() < p0 else 1
