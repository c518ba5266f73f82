import math

import numpy as np
import pytest

from qbitcommit.channels import (
    ConditionalProbs,
    NoiseParams,
    bit_flip,
    closed_form_cond_probs,
    compose,
    depolarizing,
    ideal_cond_probs,
    numeric_cond_probs,
    phase_flip,
    pipeline,
    unitary_channel,
)
from qbitcommit.quantum import (
    DensityMatrix,
    ValidationError,
    apply_channel,
    density_from_pure,
    maximally_mixed,
    measure_probability,
    observable_basis,
    state_one,
    state_zero,
)

PI4 = math.pi / 4
ZERO = density_from_pure(state_zero())


def random_state(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v /= np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


class TestElementaryChannels:
    @pytest.mark.parametrize("make", [lambda: depolarizing(0), lambda: bit_flip(0, 0), lambda: phase_flip(1, 0), lambda: unitary_channel()])
    def test_zero_strength_is_identity(self, make, rng):
        rho = random_state(rng)
        assert make()(rho).allclose(rho, atol=1e-14)

    def test_depolarizing_full_mixing(self, rng):
        assert depolarizing(1.0)(random_state(rng)).allclose(maximally_mixed(), atol=1e-14)

    def test_depolarizing_error_rate(self):
        # p_0(1|0) = p/2
        assert np.allclose(depolarizing(0.2)(ZERO).entries, np.diag([0.9, 0.1]))

    def test_bit_flip_half(self):
        assert np.allclose(bit_flip(0, 0.5)(ZERO).entries, np.diag([0.5, 0.5]))

    def test_bit_flip_basis_one(self):
        p = 0.3
        one = state_one(PI4)
        out = bit_flip(1, p)(density_from_pure(one))
        assert np.real(one.vector.conj() @ out.entries @ one.vector) == pytest.approx(1 - p)

    def test_phase_flip_keeps_diagonal(self):
        rho = DensityMatrix(np.diag([0.3, 0.7]))
        assert phase_flip(0, 0.4)(rho).allclose(rho)

    def test_phase_flip_kills_coherence(self):
        out = phase_flip(0, 0.5)(density_from_pure(state_one(PI4)))
        assert abs(out.entries[0, 1]) < 1e-15

    def test_unitary_swap(self):
        out = unitary_channel(math.pi / 2)(ZERO)
        assert np.allclose(out.entries, np.diag([0, 1]), atol=1e-15)

    def test_unitary_error_rate(self):
        a = math.asin(math.sqrt(0.1))
        out = unitary_channel(a, 0.3, 1.1)(ZERO)
        assert measure_probability(out, observable_basis(0, PI4), 1) == pytest.approx(0.1)

    def test_flip_domain(self):
        with pytest.raises(ValidationError):
            bit_flip(0, 0.6)
        assert len(bit_flip(0, 0.6, extended=True)) == 2
        with pytest.raises(ValidationError):
            NoiseParams(p_b_prep=0.7)
        NoiseParams(p_b_prep=0.7, extended_domain=True)

    def test_depolarizing_sum_bounded(self):
        with pytest.raises(ValidationError):
            NoiseParams(p_d_prep=0.6, p_d_trans=0.5)


class TestNoiseParams:
    def test_additive_merge(self):
        assert NoiseParams(p_d_prep=0.1, p_d_trans=0.2, p_d_meas=0.05).p_d == pytest.approx(0.35)

    def test_exact_merge(self):
        p = NoiseParams(p_d_prep=0.1, p_d_trans=0.2, exact_depolarizing=True)
        assert p.p_d == pytest.approx(1 - 0.9 * 0.8)

    def test_exact_flag_matches_sequential_channels(self):
        p = NoiseParams(p_d_prep=0.1, p_d_trans=0.2, p_d_meas=0.3, exact_depolarizing=True)
        seq = compose(depolarizing(0.3), depolarizing(0.2), depolarizing(0.1))
        assert seq(ZERO).allclose(depolarizing(p.p_d)(ZERO))

    def test_extra_noise(self):
        assert NoiseParams.white_noise(0.1).with_extra_depolarizing(0.2).p_d == pytest.approx(0.3)


class TestPipeline:
    def test_noiseless_identity(self, rng):
        rho = random_state(rng)
        assert pipeline(0, 1, NoiseParams())(rho).allclose(rho)

    def test_only_transmission_noise(self, rng):
        rho = random_state(rng)
        assert pipeline(1, 0, NoiseParams.white_noise(0.37))(rho).allclose(depolarizing(0.37)(rho))

    def test_rejects_non_bits(self):
        with pytest.raises(ValidationError):
            pipeline(2, 0, NoiseParams())


class TestConditionalTables:
    def test_noiseless_pi4(self):
        t = closed_form_cond_probs(NoiseParams(), PI4)
        assert t[0, 0, 0] == 1.0
        assert t[0, 0, 1] == pytest.approx(0.5)
        assert t[1, 1, 1] == pytest.approx(1.0)

    def test_white_noise_anchor(self):
        # (1 + 0.85) / 2
        assert closed_form_cond_probs(NoiseParams.white_noise(0.15), PI4)[0, 0, 0] == pytest.approx(0.925)

    def test_bit_flips_look_like_white_noise(self):
        flips = closed_form_cond_probs(NoiseParams(p_b_prep=0.25, p_b_meas=0.25), 0.6)
        white = closed_form_cond_probs(NoiseParams.white_noise(0.75), 0.6)
        assert flips.max_abs_diff(white) < 1e-15
        assert numeric_cond_probs(NoiseParams(p_b_prep=0.25, p_b_meas=0.25), 0.6).max_abs_diff(white) < 1e-12

    @pytest.mark.parametrize("theta", [0.2, PI4, 1.3])
    def test_noiseless_matches_ideal(self, theta):
        ideal = ideal_cond_probs(theta)
        assert numeric_cond_probs(NoiseParams(), theta).max_abs_diff(ideal) < 1e-12
        assert closed_form_cond_probs(NoiseParams(), theta).max_abs_diff(ideal) < 1e-12

    def test_phase_flips_invisible(self):
        p = NoiseParams(p_p_prep=0.4, p_p_meas=0.3)
        assert numeric_cond_probs(p, 0.5).max_abs_diff(ideal_cond_probs(0.5)) < 1e-12

    def test_unitary_closed_form(self):
        a, lam, mu, th, ph = 0.3, 1.0, 0.5, 0.6, 0.2
        t = closed_form_cond_probs(NoiseParams(u_alpha=a, u_lambda=lam, u_mu=mu), th, ph)
        expected = 0.5 * (1 + math.cos(2 * a) * math.cos(2 * th) - math.sin(2 * a) * math.sin(2 * th) * math.cos(ph - lam - mu))
        assert t[0, 0, 1] == pytest.approx(expected, abs=1e-14)
        assert t[0, 0, 0] == pytest.approx(0.5 * (1 + math.cos(2 * a)), abs=1e-14)

    def test_generic_oracle(self):
        p = NoiseParams(0.05, 0.1, 0.02, 0.1, 0.2, 0.3, 0.15, 0.4, 2.0, 1.0)
        assert closed_form_cond_probs(p, 0.9, 0.7).max_abs_diff(numeric_cond_probs(p, 0.9, 0.7)) < 1e-10

    def test_row_validation(self):
        with pytest.raises(ValidationError):
            ConditionalProbs(np.full((2, 2, 2), 0.6))

    def test_label_exchange_symmetry(self):
        t = closed_form_cond_probs(NoiseParams(p_d_trans=0.2, p_b_prep=0.1), 0.7)
        ex = t.label_exchange()
        for c in (0, 1):
            for r in (0, 1):
                for b in (0, 1):
                    assert ex[c, r, b] == pytest.approx(t[1 - c, 1 - r, 1 - b])
        assert ex.max_abs_diff(t) < 1e-15

    def test_monotone_in_pd(self):
        grid = np.linspace(0, 1, 51)
        vals = [closed_form_cond_probs(NoiseParams.white_noise(p), PI4)[0, 0, 0] for p in grid]
        assert np.all(np.diff(vals) < 0)
        assert np.allclose(vals, 1 - grid / 2)


class TestStageStructure:
    def test_within_stage_order_irrelevant(self, rng):
        rho = random_state(rng)
        d, x, z = depolarizing(0.2), bit_flip(1, 0.3, 0.7), phase_flip(1, 0.1, 0.7)
        ref = compose(d, x, z)(rho)
        for order in [(x, d, z), (z, x, d), (d, z, x)]:
            assert compose(*order)(rho).allclose(ref, atol=1e-12)

    def test_unitary_does_not_commute_with_flip(self):
        u, x = unitary_channel(0.4, 0.3, 0.2), bit_flip(1, 0.3, 0.7)
        rho = density_from_pure(state_one(0.7))
        assert not compose(u, x)(rho).allclose(compose(x, u)(rho), atol=1e-6)
