"""Bob's decision rule and the noise thresholds it implies.

For a claimed commitment ``c`` Bob looks at the two rows ``q(*|b)`` of the
opened statistics. Each row must be consistent with the honest expectation
``p_c(*|b)`` at the ``alpha`` level and, on every row that separates honest
from cheating behaviour, inconsistent with the cheating expectation at the
``beta`` level. Levels are expressed as multiples of the standard deviation
of the normal approximation, ``alpha_{k sigma} = Phi(k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import stats

from .adversary import AttackModel, attack_cond_probs, cheating_cond_probs
from .channels import BITS, ConditionalProbs, NoiseParams, closed_form_cond_probs
from .link import LinkParams, apply_dark_correction, dark_count_correction
from .protocol import ProtocolConfig, SessionTranscript
from .quantum import ValidationError

ACCEPT = ("accept-0", "accept-1")
REJECT = "reject"

# (alpha sigmas, beta sigmas) rows of the threshold tables
TABLE_ROWS = ((2.0, 2.0), (3.0, 1.0), (3.0, 2.0), (2.0, 1.0))
REFERENCE_PD_STAR = {(2.0, 2.0): 0.26, (3.0, 1.0): 0.23, (3.0, 2.0): 0.09, (2.0, 1.0): 0.42}
REFERENCE_PD_DT_STAR = {(2.0, 2.0): 0.40, (3.0, 1.0): 0.35, (3.0, 2.0): 0.49, (2.0, 1.0): 0.26}
GRID_STEP = 1e-3


@dataclass(frozen=True)
class Tally:
    """Counts ``n(r|b)`` stored as ``counts[r, b]``."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (2, 2) or np.any(c < 0):
            raise ValidationError("tally counts must be a non-negative 2x2 array")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    def n_b(self, b: int) -> int:
        return int(self.counts[:, b].sum())

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def defined(self, b: int) -> bool:
        return self.n_b(b) > 0

    def q(self, r: int, b: int) -> float:
        """Observed frequency ``n(r|b) / n(b)``; NaN when ``n(b) = 0``."""
        nb = self.n_b(b)
        return math.nan if nb == 0 else float(self.counts[r, b]) / nb


def tally(transcript: SessionTranscript, bob_secret: Optional[np.ndarray] = None) -> Tally:
    """Cross-tabulate opened outcomes against Bob's preparations."""
    bits = transcript.bob_bits if bob_secret is None else np.asarray(bob_secret)
    counts = np.zeros((2, 2), dtype=np.int64)
    if transcript.n:
        b = bits[transcript.announced_indices].astype(np.int64)
        r = np.asarray(transcript.outcomes, dtype=np.int64)
        np.add.at(counts, (r, b), 1)
    return Tally(counts)


def binomial_log_likelihood(n: int, k: int, p: float) -> float:
    if not 0 <= k <= n:
        raise ValidationError(f"need 0 <= k <= n, got k={k}, n={n}")
    if p == 0.0:
        return 0.0 if k == 0 else -math.inf
    if p == 1.0:
        return 0.0 if k == n else -math.inf
    log_comb = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    return log_comb + k * math.log(p) + (n - k) * math.log1p(-p)


def binomial_likelihood(n: int, k: int, p: float) -> float:
    """``C(n, k) p^k (1-p)^(n-k)``."""
    return math.exp(binomial_log_likelihood(n, k, p))


def normal_params(p: float, n: int) -> tuple[float, float]:
    """Mean and standard deviation of the observed fraction ``k/n``."""
    if n <= 0:
        raise ValidationError("n must be positive")
    return p, math.sqrt(p * (1.0 - p) / n)


def sigma_level(k: float) -> float:
    """``Phi(k)``: e.g. 0.977 for 2 sigma."""
    return float(stats.norm.cdf(k))


@dataclass(frozen=True)
class Thresholds:
    """Acceptance (``alpha``) and security (``beta``) levels in sigmas.

    ``method`` selects the tail computation: ``"binomial"`` uses exact
    binomial tails at the levels ``Phi(-k)``, ``"normal"`` compares z-scores
    with ``k`` directly.
    """

    alpha_sigmas: float = 2.0
    beta_sigmas: float = 2.0
    min_yield_fraction: float = 0.0
    method: str = "binomial"

    def __post_init__(self):
        if self.alpha_sigmas <= 0 or self.beta_sigmas <= 0:
            raise ValidationError("sigma multiples must be positive")
        if not 0.0 <= self.min_yield_fraction <= 1.0:
            raise ValidationError("min_yield_fraction must lie in [0, 1]")
        if self.method not in ("binomial", "normal"):
            raise ValidationError(f"unknown method {self.method!r}")

    @property
    def alpha(self) -> float:
        return sigma_level(self.alpha_sigmas)

    @property
    def beta(self) -> float:
        return 1.0 - sigma_level(self.beta_sigmas)


class RowCheck(NamedTuple):
    """Diagnostics of one row ``q(*|b)``; the statistic is ``q(0|b)``."""

    b: int
    n_b: int
    q0: float
    honest_mean: float
    cheat_mean: float
    z_honest: float
    z_cheat: float
    honest_tail: float
    cheat_tail: float
    separating: bool
    alpha_ok: bool
    beta_ok: bool


@dataclass(frozen=True)
class Verdict:
    decision: str
    claimed: int
    rows: tuple = field(default=())
    reason: str = ""

    @property
    def accepted(self) -> bool:
        return self.decision != REJECT


def _z(q: float, mean: float, sigma: float) -> float:
    if sigma == 0.0:
        return 0.0 if q == mean else math.copysign(math.inf, q - mean)
    return (q - mean) / sigma


def _tail(n: int, k: int, p: float, upper: bool) -> float:
    """``P(X >= k)`` if ``upper`` else ``P(X <= k)`` for ``X ~ Bin(n, p)``."""
    if upper:
        return float(stats.binom.sf(k - 1, n, p))
    return float(stats.binom.cdf(k, n, p))


def separated(honest_mean: float, cheat_mean: float, n: int, alpha_sigmas: float, beta_sigmas: float) -> bool:
    """Whether ``mu_h + k_a sigma_h <= mu_ch - k_b sigma_ch`` holds, oriented
    from the honest towards the cheating mean."""
    if honest_mean == cheat_mean or n <= 0:
        return False
    _, sh = normal_params(honest_mean, n)
    _, sc = normal_params(cheat_mean, n)
    if cheat_mean > honest_mean:
        return honest_mean + alpha_sigmas * sh <= cheat_mean - beta_sigmas * sc
    return honest_mean - alpha_sigmas * sh >= cheat_mean + beta_sigmas * sc


def check_row(t: Tally, c: int, b: int, honest: ConditionalProbs, cheat: ConditionalProbs, th: Thresholds) -> RowCheck:
    n = t.n_b(b)
    h = honest[c, 0, b]
    m = cheat[c, 0, b]
    if n == 0:
        return RowCheck(b, 0, math.nan, h, m, math.nan, math.nan, math.nan, math.nan, False, False, False)
    k = int(t.counts[0, b])
    q = k / n
    z_h = _z(q, h, normal_params(h, n)[1])
    z_c = _z(q, m, normal_params(m, n)[1])
    # the honest test looks towards the cheat; a tie falls back to two sides
    towards_up = m > h
    sep = separated(h, m, n, th.alpha_sigmas, th.beta_sigmas)
    if th.method == "normal":
        if m == h:
            alpha_ok = abs(z_h) <= th.alpha_sigmas
        else:
            alpha_ok = z_h <= th.alpha_sigmas if towards_up else z_h >= -th.alpha_sigmas
        beta_ok = z_c <= -th.beta_sigmas if towards_up else z_c >= th.beta_sigmas
        honest_tail = _tail(n, k, h, towards_up)
        cheat_tail = _tail(n, k, m, not towards_up)
    else:
        if m == h:
            honest_tail = 2.0 * min(_tail(n, k, h, True), _tail(n, k, h, False))
            alpha_ok = honest_tail > 2.0 * (1.0 - th.alpha)
        else:
            honest_tail = _tail(n, k, h, towards_up)
            alpha_ok = honest_tail > 1.0 - th.alpha
        cheat_tail = _tail(n, k, m, not towards_up)
        beta_ok = cheat_tail < th.beta
    if not sep:
        beta_ok = True
    return RowCheck(b, n, q, h, m, z_h, z_c, honest_tail, cheat_tail, sep, alpha_ok, beta_ok)


def accept_test(
    t: Tally,
    claimed_c: int,
    expected_honest: ConditionalProbs,
    expected_cheat: ConditionalProbs,
    th: Thresholds = Thresholds(),
    *,
    expected_n: Optional[float] = None,
) -> Verdict:
    """Decide whether the statistics support a commitment to ``claimed_c``.

    Every row must pass the honest (``alpha``) test. The security (``beta``)
    test is applied on rows whose honest and cheating distributions are
    separated at the configured levels; at least one such row is required,
    otherwise no cheating could be excluded and the opening is rejected.
    """
    if claimed_c not in BITS:
        raise ValidationError("claimed commitment must be 0 or 1")
    rows = tuple(check_row(t, claimed_c, b, expected_honest, expected_cheat, th) for b in BITS)
    if any(r.n_b == 0 for r in rows):
        return Verdict(REJECT, claimed_c, rows, "inconclusive: no outcomes for one of the preparations")
    if expected_n is not None and th.min_yield_fraction > 0 and t.n < th.min_yield_fraction * expected_n:
        return Verdict(REJECT, claimed_c, rows, f"yield {t.n} below {th.min_yield_fraction:g} of expected {expected_n:.1f}")
    failed = [r.b for r in rows if not r.alpha_ok]
    if failed:
        return Verdict(REJECT, claimed_c, rows, f"honest test failed on rows {failed}")
    if not any(r.separating for r in rows):
        return Verdict(REJECT, claimed_c, rows, "no row separates honest from cheating statistics")
    failed = [r.b for r in rows if not r.beta_ok]
    if failed:
        return Verdict(REJECT, claimed_c, rows, f"security test failed on rows {failed}")
    return Verdict(ACCEPT[claimed_c], claimed_c, rows, "")


def bob_expectations(
    cfg: ProtocolConfig,
    cheat_model: Optional[AttackModel] = None,
) -> tuple[ConditionalProbs, ConditionalProbs]:
    """Honest and cheating tables at Bob's configured link, dark counts included."""
    honest = closed_form_cond_probs(cfg.noise, cfg.theta, cfg.phi)
    if cheat_model is None:
        cheat = cheating_cond_probs(cfg.noise, cfg.theta, cfg.phi)
    else:
        cheat = attack_cond_probs(cheat_model, cfg.noise, cfg.theta, cfg.phi)
    if cfg.link.p_dark > 0 and cfg.link.detection_probability > 0:
        delta = dark_count_correction(cfg.link)
        honest = apply_dark_correction(honest, delta)
        cheat = apply_dark_correction(cheat, delta)
    return honest, cheat


def verify_transcript(
    transcript: SessionTranscript,
    cfg: ProtocolConfig,
    th: Thresholds = Thresholds(),
    cheat_model: Optional[AttackModel] = None,
) -> Verdict:
    from .link import expected_detections

    transcript.validate()
    honest, cheat = bob_expectations(cfg, cheat_model)
    return accept_test(
        tally(transcript),
        transcript.claimed_commitment,
        honest,
        cheat,
        th,
        expected_n=expected_detections(cfg.link, transcript.n_pulses),
    )


class ThresholdResult(NamedTuple):
    alpha_sigmas: float
    beta_sigmas: float
    value: Optional[float]
    slack: Optional[float]

    @property
    def feasible(self) -> bool:
        return self.value is not None


def _grid(upper: float, step: float) -> np.ndarray:
    n = int(math.floor(upper / step + 1e-9))
    return np.arange(n + 1) * step


def _white_noise_rows(theta: float) -> tuple[float, float, float]:
    """Noiseless crossed-row honest and cheating means and the matched honest mean."""
    clean = NoiseParams()
    honest = closed_form_cond_probs(clean, theta)
    cheat = cheating_cond_probs(clean, theta)
    return honest[0, 1, 1], cheat[0, 1, 1], honest[0, 0, 0]


def _mix(p0: np.ndarray | float, p_d):
    # white noise acts affinely on every outcome probability
    return (1.0 - p_d) * p0 + 0.5 * p_d


def _sigma(p, n: int):
    return np.sqrt(p * (1.0 - p) / n)


def table1_slack(p_d, alpha_sigmas: float, beta_sigmas: float, n: int, theta: float = math.pi / 4):
    """``(mu_ch - kb sigma_ch) - (mu_h + ka sigma_h)`` on the crossed row ``q(1|1)``
    of a commitment to 0; non-negative where the security condition holds."""
    h0, m0, _ = _white_noise_rows(theta)
    h = _mix(h0, np.asarray(p_d, dtype=float))
    m = _mix(m0, np.asarray(p_d, dtype=float))
    return (m - beta_sigmas * _sigma(m, n)) - (h + alpha_sigmas * _sigma(h, n))


def solve_pd_star(
    alpha_sigmas: float,
    beta_sigmas: float,
    n_per_state: int = 50,
    theta: float = math.pi / 4,
    step: float = GRID_STEP,
) -> ThresholdResult:
    """Largest white-noise level at which a discrimination attack is still
    excluded, on a uniform grid of spacing ``step``."""
    grid = _grid(1.0, step)
    slack = table1_slack(grid, alpha_sigmas, beta_sigmas, n_per_state, theta)
    ok = np.flatnonzero(slack >= 0)
    if ok.size == 0:
        return ThresholdResult(alpha_sigmas, beta_sigmas, None, None)
    i = ok[-1]
    return ThresholdResult(alpha_sigmas, beta_sigmas, round(float(grid[i]), 10), float(slack[i]))


def table2_slack(pd_dt, p_d: float, alpha_sigmas: float, beta_sigmas: float, n: int, theta: float = math.pi / 4):
    """``(mu_h - ka sigma_h) - (mu_dt + kb sigma_dt)`` on the matched row ``q(0|0)``."""
    _, _, h0 = _white_noise_rows(theta)
    h = _mix(h0, p_d)
    m = _mix(h0, p_d + np.asarray(pd_dt, dtype=float))
    return (h - alpha_sigmas * _sigma(h, n)) - (m + beta_sigmas * _sigma(m, n))


def solve_pd_delta_star(
    p_d: float = 0.15,
    alpha_sigmas: float = 2.0,
    beta_sigmas: float = 2.0,
    n_per_state: int = 50,
    theta: float = math.pi / 4,
    step: float = GRID_STEP,
) -> ThresholdResult:
    """Memory-noise threshold: the smallest ``p_d(dt)`` on the grid from which
    a delayed measurement is excluded. Below it a memory attack passes."""
    grid = _grid(1.0 - p_d, step)
    slack = table2_slack(grid, p_d, alpha_sigmas, beta_sigmas, n_per_state, theta)
    ok = np.flatnonzero(slack >= 0)
    if ok.size == 0:
        return ThresholdResult(alpha_sigmas, beta_sigmas, None, None)
    i = ok[0]
    return ThresholdResult(alpha_sigmas, beta_sigmas, round(float(grid[i]), 10), float(slack[i]))
