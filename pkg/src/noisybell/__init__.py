"""Finite-N statistics of CHSH Bell tests run through a noisy joint measurement."""

from .bell import (
    FiniteNReport,
    SPrimeDistribution,
    SQuasiDistribution,
    TrialCounts,
    binomial_pmf,
    exact_violation_probability,
    finite_mean_inverted,
    finite_mean_noisy,
    finite_n_report,
    gaussian_violation_probability,
    noisy_bound,
    route_equivalence_check,
    s_of_outcome,
    s_prime_distribution,
    s_quasi_distribution,
    violation_thresholds,
)
from .distributions import (
    OUTCOMES,
    BinaryDistribution,
    JointDistribution16,
    QuasiDistribution16,
    SignedBinaryDistribution,
)
from .errors import DegenerateDistributionError, DomainError, SingularInversionError
from .kernels import (
    GammaFactors,
    apply_noise,
    forward_joint_kernel,
    forward_kernel,
    inverse_kernel,
    invert_joint,
    invert_marginal,
    noisy_variance,
)
from .montecarlo import SimulationResult, SimulationSpec, estimate_violation_rate, sample_experiment
from .quantum import (
    MeasurementSettings,
    TwoQubitState,
    chsh_value,
    correlator,
    marginal_of,
    noisy_joint_distribution,
    standard_states,
)

__version__ = "0.1.0"
