import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisybell import (
    BinaryDistribution,
    DomainError,
    GammaFactors,
    JointDistribution16,
    SingularInversionError,
    apply_noise,
    forward_joint_kernel,
    forward_kernel,
    inverse_kernel,
    invert_joint,
    invert_marginal,
    noisy_variance,
)
from noisybell.distributions import OUTCOMES
from noisybell.kernels import (
    apply_joint_noise,
    forward_joint_kernel_matrix,
    forward_kernel_matrix,
    inverse_joint_kernel_matrix,
    inverse_kernel_matrix,
)

R2 = 1 / math.sqrt(2)
gammas = st.floats(-1, 1, allow_nan=False)
nonzero_gammas = gammas.filter(lambda g: abs(g) > 1e-3)
probs = st.floats(0, 1, allow_nan=False)


class TestForwardKernel:
    def test_identity_channel(self):
        assert forward_kernel(1, 1, 1) == 1
        assert forward_kernel(1, 1, -1) == 0

    @pytest.mark.parametrize("k, kp", list(itertools.product((1, -1), repeat=2)))
    def test_uniform_limit(self, k, kp):
        assert forward_kernel(0, k, kp) == 0.5

    def test_value(self):
        assert forward_kernel(R2, 1, 1) == pytest.approx(0.853553390593, abs=1e-12)

    def test_rejects_large_gamma(self):
        with pytest.raises(DomainError):
            forward_kernel(1.2, 1, 1)

    def test_rejects_non_dichotomic(self):
        with pytest.raises(DomainError):
            forward_kernel(0.5, 0, 1)

    @given(gammas)
    def test_column_stochastic(self, g):
        m = forward_kernel_matrix(g)
        assert np.all(m >= 0)
        np.testing.assert_allclose(m.sum(axis=0), 1, atol=1e-12)


class TestApplyNoise:
    def test_uniform_fixed_point(self):
        out = apply_noise(BinaryDistribution(0.5, 0.5), 0.3)
        assert out.p_plus == pytest.approx(0.5, abs=1e-12)

    def test_delta(self):
        out = apply_noise(BinaryDistribution(1, 0), R2)
        assert out.p_plus == pytest.approx(0.853553390593, abs=1e-12)
        assert out.p_minus == pytest.approx(0.146446609407, abs=1e-12)

    def test_identity(self):
        out = apply_noise(BinaryDistribution(0.3, 0.7), 1)
        assert out.p_plus == pytest.approx(0.3, abs=1e-12)

    def test_invalid_distribution(self):
        with pytest.raises(DomainError):
            BinaryDistribution(0.6, 0.6)
        with pytest.raises(DomainError):
            BinaryDistribution(1.2, -0.2)

    @given(probs, gammas)
    def test_mean_contraction(self, p, g):
        d = BinaryDistribution(p, 1 - p)
        assert apply_noise(d, g).mean == pytest.approx(g * d.mean, abs=1e-12)

    @given(probs, gammas)
    def test_variance_grows(self, p, g):
        d = BinaryDistribution(p, 1 - p)
        assert noisy_variance(apply_noise(d, g).mean) >= noisy_variance(d.mean) - 1e-12


class TestInverse:
    def test_identity(self):
        assert inverse_kernel(1, 1, 1) == 1
        assert inverse_kernel(1, 1, -1) == 0

    def test_values(self):
        assert inverse_kernel(R2, 1, 1) == pytest.approx((1 + math.sqrt(2)) / 2, abs=1e-12)
        assert inverse_kernel(R2, 1, -1) == pytest.approx((1 - math.sqrt(2)) / 2, abs=1e-12)

    def test_singular(self):
        with pytest.raises(SingularInversionError):
            inverse_kernel(0, 1, 1)
        with pytest.raises(SingularInversionError):
            invert_marginal(BinaryDistribution(0.5, 0.5), 0.0)

    def test_round_trip_example(self):
        p = BinaryDistribution(0.7, 0.3)
        back = invert_marginal(apply_noise(p, 0.6), 0.6)
        assert back.q_plus == pytest.approx(0.7, abs=1e-12)

    def test_inverts_delta_example(self):
        back = invert_marginal(BinaryDistribution(0.5 + R2 / 2, 0.5 - R2 / 2), R2)
        assert back.q_plus == pytest.approx(1, abs=1e-12)
        assert back.q_minus == pytest.approx(0, abs=1e-12)

    def test_negative_weight(self):
        back = invert_marginal(BinaryDistribution(1, 0), R2)
        assert back.q_plus == pytest.approx((1 + math.sqrt(2)) / 2, abs=1e-12)
        assert back.q_minus == pytest.approx((1 - math.sqrt(2)) / 2, abs=1e-12)
        assert back.is_negative

    @given(nonzero_gammas)
    def test_kernel_composition(self, g):
        np.testing.assert_allclose(
            inverse_kernel_matrix(g) @ forward_kernel_matrix(g), np.eye(2), atol=1e-12
        )

    @given(nonzero_gammas)
    def test_inverse_columns_sum_to_one(self, g):
        np.testing.assert_allclose(inverse_kernel_matrix(g).sum(axis=0), 1, atol=1e-12)


class TestNoisyVariance:
    @pytest.mark.parametrize("mean, var", [(0, 1), (1, 0), (-1, 0), (R2, 0.5)])
    def test_values(self, mean, var):
        assert noisy_variance(mean) == pytest.approx(var, abs=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            noisy_variance(1.5)


class TestGammaFactors:
    def test_feasible(self):
        GammaFactors(0.6, 0.8, R2, R2)

    def test_infeasible(self):
        with pytest.raises(DomainError):
            GammaFactors.equal(0.8)

    def test_cross_party_unconstrained(self):
        GammaFactors(1.0, 0.0, 1.0, 0.0)

    def test_is_equal(self):
        assert GammaFactors.equal(0.5).is_equal()
        assert not GammaFactors(0.5, 0.4, 0.5, 0.5).is_equal()
        with pytest.raises(DomainError):
            GammaFactors(0.5, 0.4, 0.5, 0.5).common


class TestJointKernel:
    def test_identity(self):
        g = GammaFactors(1, 0, 1, 0)
        # gamma_y = gamma_v = 0 makes the y, v channels uniform
        assert forward_joint_kernel(g, (1, 1, 1, 1), (1, -1, 1, 1)) == pytest.approx(0.25)

    def test_all_unit(self):
        m = forward_joint_kernel_matrix(1.0, enforce_feasibility=False)
        np.testing.assert_array_equal(m, np.eye(16))

    def test_uniform(self):
        m = forward_joint_kernel_matrix(GammaFactors.equal(0))
        np.testing.assert_allclose(m, 1 / 16)

    def test_diagonal_value(self):
        v = forward_joint_kernel(GammaFactors.equal(R2), (1, -1, 1, -1), (1, -1, 1, -1))
        assert v == pytest.approx(0.853553390593 ** 4, abs=1e-12)
        assert v == pytest.approx(0.530790042945, abs=1e-11)

    def test_infeasible_rejected(self):
        with pytest.raises(DomainError):
            forward_joint_kernel(0.9, (1,) * 4, (1,) * 4)

    def test_matrix_matches_scalar(self):
        g = GammaFactors(0.6, 0.8, 0.3, -0.5)
        m = forward_joint_kernel_matrix(g)
        for (i, xi), (j, xp) in itertools.product(enumerate(OUTCOMES), repeat=2):
            assert m[j, i] == pytest.approx(forward_joint_kernel(g, xi, xp), abs=1e-15)

    def test_columns_sum_to_one(self):
        m = forward_joint_kernel_matrix(GammaFactors(0.6, 0.8, 0.3, -0.5))
        np.testing.assert_allclose(m.sum(axis=0), 1, atol=1e-12)

    def test_inverse_is_matrix_inverse(self):
        g = GammaFactors(0.6, 0.8, 0.3, -0.5)
        np.testing.assert_allclose(
            inverse_joint_kernel_matrix(g) @ forward_joint_kernel_matrix(g), np.eye(16), atol=1e-12
        )


class TestInvertJoint:
    def test_unit_gamma_identity(self):
        p = JointDistribution16(np.arange(1, 17) / 136)
        out = invert_joint(p, 1.0, enforce_feasibility=False)
        np.testing.assert_allclose(out.weights, p.probabilities, atol=1e-15)

    @settings(max_examples=50)
    @given(st.lists(st.floats(0.01, 1), min_size=16, max_size=16))
    def test_round_trip_gamma_08(self, raw):
        p = JointDistribution16(np.array(raw) / sum(raw))
        noisy = apply_joint_noise(p, 0.8, enforce_feasibility=False)
        back = invert_joint(noisy, 0.8, enforce_feasibility=False)
        np.testing.assert_allclose(back.weights, p.probabilities, atol=1e-12)
        assert back.weights.sum() == pytest.approx(1, abs=1e-12)

    @settings(max_examples=50)
    @given(st.lists(st.floats(0.01, 1), min_size=16, max_size=16),
           st.sampled_from([GammaFactors(0.6, 0.8, R2, R2), GammaFactors(-0.3, 0.5, 0.9, 0.2)]))
    def test_round_trip_feasible(self, raw, g):
        p = JointDistribution16(np.array(raw) / sum(raw))
        back = invert_joint(apply_joint_noise(p, g), g)
        np.testing.assert_allclose(back.weights, p.probabilities, atol=1e-12)

    def test_singular(self):
        p = JointDistribution16(np.full(16, 1 / 16))
        with pytest.raises(SingularInversionError):
            invert_joint(p, GammaFactors(0.5, 0.0, 0.5, 0.5))

    def test_singlet_inverts_to_negative(self):
        from noisybell.quantum import chsh_optimal_settings, noisy_joint_distribution, singlet

        g = GammaFactors.equal(R2)
        quasi = invert_joint(noisy_joint_distribution(singlet(), chsh_optimal_settings(), g), g)
        assert quasi.is_negative
        assert quasi.weights.sum() == pytest.approx(1, abs=1e-12)
        # p(xi) = (1 + s(xi)/sqrt2)/16 for the singlet at these settings
        assert quasi.min_entry == pytest.approx((1 - math.sqrt(2)) / 16, abs=1e-12)
