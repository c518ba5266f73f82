"""Distinguishability of conditional-probability tables.

Classical fidelity (Bhattacharyya coefficient) and relative entropy between
two-outcome distributions, and the three table averages used to compare an
honest, a noisy and a cheating table:

* ``avg_fidelity_noise``: reference rows against candidate rows, same (c, b);
* ``avg_fidelity_states``: ``|0>`` rows against ``|1>`` rows, same observable;
* ``avg_fidelity_observables``: ``C_0`` rows against ``C_1`` rows, same state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .channels import BITS, ConditionalProbs, NoiseParams, closed_form_cond_probs
from .quantum import ValidationError

DIST_TOL = 1e-12
DEFAULT_THETA_POINTS = 1000


@dataclass(frozen=True)
class Distribution:
    probs: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(x) for x in self.probs)
        if not p:
            raise ValidationError("distribution must be non-empty")
        if any(x < -DIST_TOL for x in p):
            raise ValidationError("distribution has negative entries")
        if abs(sum(p) - 1.0) > DIST_TOL:
            raise ValidationError(f"distribution sums to {sum(p)!r}, expected 1")
        object.__setattr__(self, "probs", tuple(max(0.0, x) for x in p))

    def __len__(self) -> int:
        return len(self.probs)


def _as_probs(p) -> np.ndarray:
    if isinstance(p, Distribution):
        return np.asarray(p.probs)
    return np.asarray(Distribution(tuple(p)).probs)


def fidelity(p: Distribution | Sequence[float], q: Distribution | Sequence[float]) -> float:
    """Bhattacharyya coefficient ``sum_i sqrt(p_i q_i)``."""
    a, b = _as_probs(p), _as_probs(q)
    if a.shape != b.shape:
        raise ValidationError(f"length mismatch: {len(a)} vs {len(b)}")
    return float(min(1.0, np.sum(np.sqrt(a * b))))


def relative_entropy(p: Distribution | Sequence[float], q: Distribution | Sequence[float]) -> float:
    """Kullback-Leibler divergence ``S(p||q)`` in nats.

    Returns ``math.inf`` when ``p`` puts weight where ``q`` has none; use
    :func:`math.isinf` to detect that case.
    """
    a, b = _as_probs(p), _as_probs(q)
    if a.shape != b.shape:
        raise ValidationError(f"length mismatch: {len(a)} vs {len(b)}")
    total = 0.0
    for pi, qi in zip(a, b):
        if pi == 0.0:
            continue
        if qi == 0.0:
            return math.inf
        total += pi * (math.log(pi) - math.log(qi))
    return max(0.0, total)


def avg_fidelity_noise(ideal: ConditionalProbs, noisy: ConditionalProbs) -> float:
    """Mean fidelity over the four rows ``(p_c(*|b), p_c^E(*|b))``."""
    return 0.25 * sum(fidelity(ideal.row(c, b), noisy.row(c, b)) for c in BITS for b in BITS)


def avg_fidelity_states(cp: ConditionalProbs) -> float:
    return 0.5 * sum(fidelity(cp.row(c, 0), cp.row(c, 1)) for c in BITS)


def avg_fidelity_observables(cp: ConditionalProbs) -> float:
    return 0.5 * sum(fidelity(cp.row(0, b), cp.row(1, b)) for b in BITS)


class EntropyAverages(NamedTuple):
    """Averaged relative entropies.

    ``noise`` is ``<S(reference || candidate)>``; the two pair-valued fields
    hold both argument orders, e.g. ``states = (<S(|0>||1>)>, <S(|1>||0>)>)``
    evaluated on the candidate table.
    """

    noise: float
    states: tuple[float, float]
    observables: tuple[float, float]


def _mean(values) -> float:
    values = list(values)
    if any(math.isinf(v) for v in values):
        return math.inf
    return sum(values) / len(values)


def avg_relative_entropy_noise(reference: ConditionalProbs, candidate: ConditionalProbs) -> float:
    return _mean(relative_entropy(reference.row(c, b), candidate.row(c, b)) for c in BITS for b in BITS)


def avg_relative_entropies(reference: ConditionalProbs, candidate: ConditionalProbs) -> EntropyAverages:
    cp = candidate
    states = (
        _mean(relative_entropy(cp.row(c, 0), cp.row(c, 1)) for c in BITS),
        _mean(relative_entropy(cp.row(c, 1), cp.row(c, 0)) for c in BITS),
    )
    observables = (
        _mean(relative_entropy(cp.row(0, b), cp.row(1, b)) for b in BITS),
        _mean(relative_entropy(cp.row(1, b), cp.row(0, b)) for b in BITS),
    )
    return EntropyAverages(avg_relative_entropy_noise(reference, candidate), states, observables)


def fidelity_balance(cp: ConditionalProbs) -> float:
    return abs(avg_fidelity_states(cp) - avg_fidelity_observables(cp))


def default_theta_grid(points: int = DEFAULT_THETA_POINTS) -> np.ndarray:
    """``points`` uniformly spaced angles strictly inside (0, pi/2)."""
    return (np.arange(points) + 0.5) * (math.pi / 2) / points


class ThetaScan(NamedTuple):
    theta_star: float
    grid: np.ndarray
    surface: np.ndarray
    degenerate: bool


def theta_balance_scan(params: NoiseParams, grid: Sequence[float] | None = None, *, phi: float = 0.0) -> ThetaScan:
    """Scan ``|<F(|0>,|1>)> - <F(C_0,C_1)>|`` over ``theta``.

    ``degenerate`` is set when the surface is flat (fully random statistics),
    in which case ``theta_star`` carries no information.
    """
    thetas = default_theta_grid() if grid is None else np.asarray(grid, dtype=float)
    if thetas.size == 0:
        raise ValidationError("theta grid is empty")
    surface = np.array([fidelity_balance(closed_form_cond_probs(params, th, phi)) for th in thetas])
    degenerate = bool(np.ptp(surface) < 1e-12)
    return ThetaScan(float(thetas[int(np.argmin(surface))]), thetas, surface, degenerate)


def _kl_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``S(p||q)`` for one fixed row ``p`` against a stack of rows ``q[..., i]``."""
    out = np.zeros(q.shape[:-1])
    for i, pi in enumerate(p):
        if pi == 0.0:
            continue
        with np.errstate(divide="ignore"):
            out = out + pi * (math.log(pi) - np.log(q[..., i]))
    return np.maximum(out, 0.0)


def added_noise_entropy(params: NoiseParams, deltas, theta: float = math.pi / 4, phi: float = 0.0) -> np.ndarray:
    """``<S(honest || cheat + delta)>`` for each added white-noise level.

    The honest table is taken at the link's own noise. Depolarizing commutes
    with the other (unital) stages, so the cheating rows are affine in the
    total ``p_d`` and one noiseless evaluation suffices.
    """
    from .adversary import cheating_cond_probs

    d = np.asarray(deltas, dtype=float)
    if np.any(d < 0) or np.any(params.p_d + d > 1.0 + 1e-12):
        raise ValidationError("added noise must keep the total p_d within [0, 1]")
    honest = closed_form_cond_probs(params, theta, phi)
    clean = replace(params, p_d_prep=0.0, p_d_trans=0.0, p_d_meas=0.0)
    base = cheating_cond_probs(clean, theta, phi)
    if params.exact_depolarizing:
        total = 1.0 - (1.0 - params.p_d) * (1.0 - d)
    else:
        total = params.p_d + d
    terms = []
    for c in BITS:
        for b in BITS:
            q0 = (1.0 - total) * base[c, 0, b] + 0.5 * total
            q = np.stack([q0, 1.0 - q0], axis=-1)
            terms.append(_kl_rows(np.asarray(honest.row(c, b)), q))
    return np.mean(terms, axis=0)


def minimize_added_noise(params: NoiseParams, step: float = 1e-4, theta: float = math.pi / 4) -> tuple[float, float]:
    """Grid minimiser of :func:`added_noise_entropy` over ``[0, 1 - p_d]``."""
    n = int(math.floor((1.0 - params.p_d) / step + 1e-9))
    grid = np.arange(n + 1) * step
    curve = added_noise_entropy(params, grid, theta)
    i = int(np.argmin(curve))
    return float(grid[i]), float(curve[i])
