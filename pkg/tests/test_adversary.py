import math

import numpy as np
import pytest

from qbitcommit.adversary import (
    AttackModel,
    attack_cond_probs,
    bounded_memory_probs,
    cheating_cond_probs,
    discrimination_basis,
    discrimination_vectors,
    helstrom_error,
    memory_attack_probs,
    nondemolition_reduction,
    optimal_added_noise,
    reduce_attack,
)
from qbitcommit.channels import ConditionalProbs, NoiseParams, closed_form_cond_probs
from qbitcommit.quantum import (
    MeasurementBasis,
    PureState,
    ValidationError,
    density_from_pure,
    measure_probability,
    state_one,
    state_zero,
)

PI4 = math.pi / 4
COS2_PI8 = math.cos(math.pi / 8) ** 2


def success(basis, theta):
    p0 = measure_probability(density_from_pure(state_zero()), basis, 0)
    p1 = measure_probability(density_from_pure(state_one(theta)), basis, 1)
    return p0, p1


class TestHelstrom:
    def test_anchors(self):
        assert helstrom_error(math.pi / 2) == pytest.approx(0.0)
        assert helstrom_error(PI4) == pytest.approx((1 - 1 / math.sqrt(2)) / 2)
        assert helstrom_error(1e-9) == pytest.approx(0.5)

    def test_breidbart_success(self):
        p0, p1 = success(discrimination_basis(PI4), PI4)
        assert p0 == pytest.approx(COS2_PI8, abs=1e-12)
        assert p1 == pytest.approx(1 - helstrom_error(PI4), abs=1e-12)

    @pytest.mark.parametrize("theta", np.linspace(0.05, math.pi / 2 - 0.05, 9))
    def test_error_matches_bound(self, theta):
        p0, p1 = success(discrimination_basis(theta), theta)
        assert 1 - 0.5 * (p0 + p1) == pytest.approx(helstrom_error(theta), abs=1e-12)

    def test_vectors_orthonormal(self):
        a, b = discrimination_vectors(0.6, 0.4)
        assert abs(np.vdot(a.vector, b.vector)) < 1e-15

    @pytest.mark.parametrize("theta", [0.3, PI4, 1.1])
    def test_no_real_basis_beats_it(self, theta):
        best = 1 - helstrom_error(theta)
        for g in np.arange(0, math.pi, 1e-3):
            basis = MeasurementBasis.from_states(
                PureState(complex(math.cos(g)), complex(math.sin(g))),
                PureState(complex(-math.sin(g)), complex(math.cos(g))),
            )
            p0, p1 = success(basis, theta)
            assert 0.5 * (p0 + p1) <= best + 1e-12


class TestCheatingTables:
    def test_noiseless(self):
        t = cheating_cond_probs(NoiseParams(), PI4)
        assert t[0, 0, 0] == pytest.approx(COS2_PI8)
        assert t[1, 1, 1] == pytest.approx(COS2_PI8)
        # one outcome string serves both commitments
        assert np.allclose(t.table[0], t.table[1])

    def test_table_one_anchor(self):
        t = cheating_cond_probs(NoiseParams.white_noise(0.26), PI4)
        assert t[0, 1, 1] == pytest.approx(0.74 * COS2_PI8 + 0.13, abs=1e-12)
        assert t[0, 1, 1] == pytest.approx(0.7616, abs=1e-4)

    def test_full_noise_uniform(self):
        assert np.allclose(cheating_cond_probs(NoiseParams.white_noise(1.0), PI4).table, 0.5)

    def test_added_noise_is_additive(self):
        a = cheating_cond_probs(NoiseParams.white_noise(0.1), PI4, added_noise=0.2)
        b = cheating_cond_probs(NoiseParams.white_noise(0.3), PI4)
        assert a.max_abs_diff(b) < 1e-14


class TestOptimalNoise:
    def test_values(self):
        assert optimal_added_noise(0.0) == pytest.approx(0.29289, abs=1e-5)
        assert optimal_added_noise(1.0) == 0.0
        assert optimal_added_noise(0.5) == pytest.approx(0.14645, abs=1e-5)

    def test_domain(self):
        with pytest.raises(ValidationError):
            optimal_added_noise(1.5)


class TestMemoryAttacks:
    def test_no_storage_noise_is_honest(self):
        p = NoiseParams.white_noise(0.15)
        assert memory_attack_probs(p, 0.0, PI4).max_abs_diff(closed_form_cond_probs(p, PI4)) == 0.0

    def test_table_two_anchor(self):
        assert memory_attack_probs(NoiseParams.white_noise(0.15), 0.4, PI4)[0, 0, 0] == pytest.approx(0.725)

    def test_full_noise_uniform(self):
        assert np.allclose(memory_attack_probs(NoiseParams.white_noise(0.3), 0.7, PI4).table, 0.5)

    def test_too_much_noise(self):
        with pytest.raises(ValidationError):
            memory_attack_probs(NoiseParams.white_noise(0.5), 0.6, PI4)

    def test_bounded_memory_endpoints(self):
        h = closed_form_cond_probs(NoiseParams.white_noise(0.1), PI4)
        c = cheating_cond_probs(NoiseParams.white_noise(0.1), PI4)
        assert bounded_memory_probs(1.0, h, c).max_abs_diff(h) == 0.0
        assert bounded_memory_probs(0.0, h, c).max_abs_diff(c) == 0.0
        mid = bounded_memory_probs(0.5, h, c)
        assert np.allclose(mid.table, 0.5 * (h.table + c.table))
        assert isinstance(mid, ConditionalProbs)


class TestAttackModels:
    def test_nondemolition_reduction(self):
        mem = AttackModel.memory(0.3)
        assert nondemolition_reduction(1.0, mem) == mem
        assert nondemolition_reduction(0.0, mem).kind == "breidbart"
        red = nondemolition_reduction(0.7, mem)
        assert red.kind == "bounded_memory" and red.nu == 0.7 and red.pd_dt == 0.3

    def test_reduce_normalises(self):
        assert reduce_attack(AttackModel.nondemolition(0.4, 0.2)) == AttackModel.bounded_memory(0.4, 0.2)
        assert reduce_attack(AttackModel.bounded_memory(1.0, 0.2)) == AttackModel.memory(0.2)

    def test_nondemolition_table_equals_bounded(self):
        p = NoiseParams.white_noise(0.1)
        a = attack_cond_probs(AttackModel.nondemolition(0.6, 0.2), p, PI4)
        b = attack_cond_probs(AttackModel.bounded_memory(0.6, 0.2), p, PI4)
        assert a.max_abs_diff(b) == 0.0

    def test_validation(self):
        with pytest.raises(ValidationError):
            AttackModel("teleport")
        with pytest.raises(ValidationError):
            AttackModel.memory(1.2)
        with pytest.raises(ValidationError):
            AttackModel.bounded_memory(0.5, 0.1, fallback=AttackModel.memory(0.1))
        with pytest.raises(ValidationError):
            attack_cond_probs(AttackModel.memory(0.5), NoiseParams.white_noise(0.6), PI4)

    def test_describe(self):
        assert AttackModel.bounded_memory(0.5, 0.1).describe() == "bounded_memory(nu=0.5, pd_dt=0.1, fallback=breidbart)"
