import math

import numpy as np
import pytest

from qbitcommit.channels import depolarizing
from qbitcommit.quantum import (
    DensityMatrix,
    KrausChannel,
    MeasurementBasis,
    PureState,
    ValidationError,
    apply_channel,
    born_sample,
    compose,
    density_from_pure,
    identity_channel,
    maximally_mixed,
    measure_probability,
    observable_basis,
    state_one,
    state_one_perp,
    state_zero,
    state_zero_perp,
)

PI4 = math.pi / 4


class TestPureState:
    def test_rejects_unnormalised(self):
        with pytest.raises(ValidationError):
            PureState(1.0, 0.1)

    def test_protocol_states_orthogonality(self):
        th, ph = 0.7, 1.3
        one, perp = state_one(th, ph).vector, state_one_perp(th, ph).vector
        assert abs(np.vdot(one, perp)) < 1e-15
        assert abs(np.vdot(state_zero().vector, one)) == pytest.approx(math.cos(th), abs=1e-15)

    def test_from_vector_roundtrip(self):
        psi = state_one(0.3, 0.4)
        assert np.allclose(PureState.from_vector(psi.vector).vector, psi.vector)


class TestDensityMatrix:
    def test_zero_is_projector(self):
        assert np.allclose(density_from_pure(state_zero()).entries, np.diag([1, 0]))

    def test_one_at_pi4_all_half(self):
        # |1> = (|0> + |0perp>)/sqrt 2 at theta = pi/4
        assert np.allclose(density_from_pure(state_one(PI4)).entries, 0.5 * np.ones((2, 2)))

    def test_one_at_pi2_is_perp(self):
        assert np.allclose(density_from_pure(state_one(math.pi / 2)).entries, np.diag([0, 1]), atol=1e-15)

    @pytest.mark.parametrize(
        "entries",
        [
            [[1, 0.1], [0, 0]],  # not Hermitian
            [[0.6, 0], [0, 0.6]],  # trace 1.2
            [[1.1, 0], [0, -0.1]],  # negative eigenvalue
            np.eye(3) / 3,
        ],
    )
    def test_validation(self, entries):
        with pytest.raises(ValidationError):
            DensityMatrix(entries)

    def test_immutable(self):
        rho = maximally_mixed()
        with pytest.raises(ValueError):
            rho.entries[0, 0] = 1.0

    def test_eigenvalues_and_purity(self):
        rho = DensityMatrix(np.diag([0.85, 0.15]))
        assert rho.eigenvalues() == pytest.approx((0.15, 0.85))
        assert rho.purity() == pytest.approx(0.85**2 + 0.15**2)

    def test_bloch_vector_of_plus(self):
        assert np.allclose(density_from_pure(state_one(PI4)).bloch_vector(), [1, 0, 0])


class TestChannels:
    def test_identity(self):
        rho = density_from_pure(state_one(0.4, 0.9))
        assert apply_channel(identity_channel(), rho).allclose(rho)

    def test_full_depolarizing(self):
        out = apply_channel(depolarizing(1.0), density_from_pure(state_zero()))
        assert out.allclose(maximally_mixed(), atol=1e-15)

    def test_partial_depolarizing(self):
        # (1-p) diag(1,0) + p I/2 at p = 0.3
        out = apply_channel(depolarizing(0.3), density_from_pure(state_zero()))
        assert np.allclose(out.entries, np.diag([0.85, 0.15]), atol=1e-15)

    def test_completeness_enforced(self):
        with pytest.raises(ValidationError):
            KrausChannel([np.eye(2), np.eye(2)])

    def test_compose_order(self):
        # rightmost acts first: compose(A, B)(rho) = A(B(rho))
        a = KrausChannel([np.array([[0, 1], [1, 0]])])
        b = depolarizing(0.2)
        rho = density_from_pure(state_zero())
        assert compose(a, b)(rho).allclose(a(b(rho)))


class TestMeasurement:
    def test_c0_on_zero(self):
        assert measure_probability(density_from_pure(state_zero()), observable_basis(0, PI4), 0) == 1.0

    def test_c0_on_one(self):
        p = measure_probability(density_from_pure(state_one(PI4)), observable_basis(0, PI4), 0)
        assert p == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("c", [0, 1])
    @pytest.mark.parametrize("outcome", [0, 1])
    def test_mixed_state_uniform(self, c, outcome):
        assert measure_probability(maximally_mixed(), observable_basis(c, 0.6), outcome) == pytest.approx(0.5)

    def test_c1_outcome_labels(self):
        basis = observable_basis(1, 0.5, 0.2)
        assert measure_probability(density_from_pure(state_one(0.5, 0.2)), basis, 1) == pytest.approx(1.0)
        assert measure_probability(density_from_pure(state_one_perp(0.5, 0.2)), basis, 0) == pytest.approx(1.0)

    def test_projector_validation(self):
        with pytest.raises(ValidationError):
            MeasurementBasis(np.eye(2), np.zeros((2, 2)) + 0.1)
        with pytest.raises(ValidationError):
            observable_basis(0, PI4).projector(2)

    def test_sample_deterministic_outcome(self, rng):
        rho = density_from_pure(state_zero())
        assert all(born_sample(rho, observable_basis(0, PI4), rng) == 0 for _ in range(200))

    def test_sample_frequency(self):
        rng = np.random.default_rng(5)
        basis = observable_basis(0, PI4)
        rho = maximally_mixed()
        freq = np.mean([born_sample(rho, basis, rng) == 0 for _ in range(100_000)])
        assert abs(freq - 0.5) < 0.01

    def test_sample_reproducible(self):
        basis = MeasurementBasis.from_states(state_zero(), state_zero_perp())
        rho = density_from_pure(state_one(0.9))
        g1, g2 = np.random.default_rng(11), np.random.default_rng(11)
        s1 = [born_sample(rho, basis, g1) for _ in range(50)]
        s2 = [born_sample(rho, basis, g2) for _ in range(50)]
        assert s1 == s2
