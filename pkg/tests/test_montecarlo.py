import math

import numpy as np
import pytest
from scipy import stats

from noisybell import GammaFactors, JointDistribution16, exact_violation_probability, s_prime_distribution
from noisybell.errors import DomainError
from noisybell.montecarlo import (
    BLOCK_SIZE,
    SimulationSpec,
    block_stream,
    estimate_violation_rate,
    sample_counts,
    sample_experiment,
    three_sigma,
)
from noisybell.quantum import chsh_optimal_settings, noisy_joint_distribution, singlet

R2 = 1 / math.sqrt(2)
SQ8 = 2 * math.sqrt(2)


@pytest.fixture
def rng():
    return block_stream(2024, 0)


def singlet_joint():
    return noisy_joint_distribution(singlet(), chsh_optimal_settings(), GammaFactors.equal(R2))


class TestSampleExperiment:
    def test_certain_plus(self, rng):
        d = s_prime_distribution(2, 1)
        assert all(sample_experiment(d, 50, rng).n == 50 for _ in range(10))

    def test_certain_minus(self, rng):
        d = s_prime_distribution(-2, 1)
        assert all(sample_experiment(d, 50, rng).n == 0 for _ in range(10))

    @pytest.mark.parametrize("N", [10_000, 500])
    def test_mean_within_three_sigma(self, rng, N):
        d = s_prime_distribution(SQ8, R2)
        p = d.p_plus2
        counts = sample_counts(d, N, 1000, rng)
        sigma = math.sqrt(p * (1 - p) / (N * 1000))
        assert abs(counts.mean() / N - p) <= 3 * sigma

    def test_reproducible(self):
        d = s_prime_distribution(0.5, R2)
        a = sample_counts(d, 2000, 100, block_stream(9, 3))
        b = sample_counts(d, 2000, 100, block_stream(9, 3))
        np.testing.assert_array_equal(a, b)

    def test_inverse_transform_law(self, rng):
        # large-N path: chi-square of the count histogram against the binomial law
        N, reps = 1200, 20_000
        d = s_prime_distribution(1.0, R2)
        counts = sample_counts(d, N, reps, rng)
        law = stats.binom(N, d.p_plus2)
        edges = np.arange(law.ppf(0.001), law.ppf(0.999) + 1, 5)
        cdf = law.cdf(edges)
        expected = reps * np.diff(np.concatenate([[0], cdf[:-1], [1]]))
        observed = np.bincount(np.searchsorted(edges[:-1], counts, side="left"), minlength=len(edges))
        assert stats.chisquare(observed, expected).pvalue > 0.001


class TestEstimate:
    def test_single_trial(self):
        for seed in range(5):
            spec = SimulationSpec(1, 3000, seed, s_prime_distribution(0.3, R2))
            assert estimate_violation_rate(spec, R2).empirical_violation_rate == 1.0

    def test_pair(self):
        spec = SimulationSpec(2, 100_000, 17, s_prime_distribution(0, R2))
        res = estimate_violation_rate(spec, R2)
        assert abs(res.empirical_violation_rate - 0.5) <= three_sigma(0.5, 100_000)
        assert res.violation_count == round(res.empirical_violation_rate * 100_000)

    def test_summary(self):
        spec = SimulationSpec(50, 5000, 3, s_prime_distribution(SQ8, R2))
        res = estimate_violation_rate(spec, R2)
        assert -2 <= res.s_prime_min <= res.s_prime_mean <= res.s_prime_max <= 2
        assert res.s_prime_mean == pytest.approx(math.sqrt(2), abs=0.02)

    def test_joint_vs_s_prime(self):
        N, reps = 20, 50_000
        joint = singlet_joint()
        a = estimate_violation_rate(SimulationSpec(N, reps, 1, joint), R2).empirical_violation_rate
        b = estimate_violation_rate(
            SimulationSpec(N, reps, 2, s_prime_distribution(SQ8, R2)), R2).empirical_violation_rate
        p = exact_violation_probability(N, SQ8, R2)
        assert abs(a - b) <= 3 * math.sqrt(2 * p * (1 - p) / reps)

    def test_chi_square_distribution_equivalence(self):
        N, reps = 30, 4000
        joint = singlet_joint()
        n_joint = sample_counts(joint, N, reps, block_stream(5, 0)).sum()
        n_direct = sample_counts(s_prime_distribution(SQ8, R2), N, reps, block_stream(6, 0)).sum()
        total = N * reps
        table = [[n_joint, total - n_joint], [n_direct, total - n_direct]]
        assert stats.chi2_contingency(table).pvalue > 0.001

    def test_determinism_across_workers(self):
        spec = SimulationSpec(30, 3 * BLOCK_SIZE + 17, 99, singlet_joint())
        one = estimate_violation_rate(spec, R2, workers=1)
        assert estimate_violation_rate(spec, R2, workers=1) == one
        assert estimate_violation_rate(spec, R2, workers=3) == one

    def test_spec_validation(self):
        with pytest.raises(DomainError):
            SimulationSpec(0, 10, 1, s_prime_distribution(0, R2))
        with pytest.raises(DomainError):
            SimulationSpec(1, 0, 1, s_prime_distribution(0, R2))
        with pytest.raises(DomainError):
            SimulationSpec(1, 1, 1, source=0.5)

    def test_joint_source_type(self):
        assert isinstance(singlet_joint(), JointDistribution16)
