"""Unbiased noise channels for dichotomic observables and their inverses.

A noisy surrogate K' of a +/-1 observable K is related to it by the kernel
``k(kappa'|kappa) = (1 + gamma * kappa * kappa') / 2``.  Means contract as
``<K'> = gamma <K>``.  For gamma != 0 the kernel is invertible, with inverse
``(1 + kappa * kappa' / gamma) / 2``, which is no longer a stochastic matrix.

2x2 matrices are indexed with 0 <-> +1 and 1 <-> -1.  Forward matrices are
``M[kappa', kappa]`` (column-stochastic), inverse matrices ``M[kappa, kappa']``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .distributions import (
    OUTCOMES,
    PROB_TOL,
    SIGNS,
    BinaryDistribution,
    JointDistribution16,
    QuasiDistribution16,
    SignedBinaryDistribution,
    _check_sign,
    outcome_index,
)
from .errors import DomainError, SingularInversionError

FEASIBILITY_TOL = 1e-12


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not math.isfinite(gamma) or abs(gamma) > 1 + FEASIBILITY_TOL:
        raise DomainError(f"|gamma| must be <= 1, got {gamma}")
    return gamma


def _check_invertible(gamma: float) -> float:
    gamma = _check_gamma(gamma)
    if gamma == 0:
        raise SingularInversionError("the gamma = 0 kernel is rank one and has no inverse")
    return gamma


@dataclass(frozen=True)
class GammaFactors:
    """Accuracy factors of the noisy joint measurement of X, Y (party A) and U, V (party B).

    Feasibility requires ``gamma_x**2 + gamma_y**2 <= 1`` and
    ``gamma_u**2 + gamma_v**2 <= 1``; products across parties are unconstrained.
    """

    gamma_x: float
    gamma_y: float
    gamma_u: float
    gamma_v: float

    def __post_init__(self):
        for g in self.as_tuple():
            _check_gamma(g)
        for name, (a, b) in (("X, Y", (self.gamma_x, self.gamma_y)),
                             ("U, V", (self.gamma_u, self.gamma_v))):
            if a * a + b * b > 1 + FEASIBILITY_TOL:
                raise DomainError(
                    f"infeasible gamma factors for ({name}): "
                    f"{a}^2 + {b}^2 = {a * a + b * b} > 1"
                )

    @classmethod
    def equal(cls, gamma: float) -> "GammaFactors":
        return cls(gamma, gamma, gamma, gamma)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.gamma_x, self.gamma_y, self.gamma_u, self.gamma_v)

    def is_equal(self) -> bool:
        return len(set(self.as_tuple())) == 1

    @property
    def common(self) -> float:
        """The shared gamma; raises if the four factors differ."""
        if not self.is_equal():
            raise DomainError(f"gamma factors are not all equal: {self.as_tuple()}")
        return self.gamma_x


def forward_kernel(gamma: float, kappa: int, kappa_prime: int) -> float:
    """Probability of recording ``kappa_prime`` when the noiseless value is ``kappa``."""
    gamma = _check_gamma(gamma)
    return 0.5 * (1 + gamma * _check_sign(kappa) * _check_sign(kappa_prime))


def inverse_kernel(gamma: float, kappa: int, kappa_prime: int) -> float:
    """Signed weight of ``kappa`` given the recorded ``kappa_prime``."""
    gamma = _check_invertible(gamma)
    return 0.5 * (1 + _check_sign(kappa) * _check_sign(kappa_prime) / gamma)


def forward_kernel_matrix(gamma: float) -> np.ndarray:
    return np.array([[forward_kernel(gamma, k, kp) for k in SIGNS] for kp in SIGNS])


def inverse_kernel_matrix(gamma: float) -> np.ndarray:
    return np.array([[inverse_kernel(gamma, k, kp) for kp in SIGNS] for k in SIGNS])


def apply_noise(marginal: BinaryDistribution, gamma: float) -> BinaryDistribution:
    if not isinstance(marginal, BinaryDistribution):
        raise DomainError("apply_noise expects a BinaryDistribution")
    gamma = _check_gamma(gamma)
    p_plus, p_minus = (
        sum(forward_kernel(gamma, k, kp) * marginal[k] for k in SIGNS) for kp in SIGNS
    )
    return BinaryDistribution(p_plus, p_minus)


def invert_marginal(noisy: BinaryDistribution, gamma: float) -> SignedBinaryDistribution:
    """Undo :func:`apply_noise`; the result may carry a negative weight."""
    gamma = _check_invertible(gamma)
    q_plus, q_minus = (
        sum(inverse_kernel(gamma, k, kp) * noisy[kp] for kp in SIGNS) for k in SIGNS
    )
    return SignedBinaryDistribution(q_plus, q_minus)


def noisy_variance(mean_noisy: float) -> float:
    """Variance of a +/-1 variable, fixed by its mean: ``1 - <K'>**2``."""
    if abs(mean_noisy) > 1 + PROB_TOL:
        raise DomainError(f"mean of a +/-1 variable must lie in [-1, 1], got {mean_noisy}")
    return max(0.0, 1.0 - mean_noisy * mean_noisy)


def _joint_gammas(gammas, enforce_feasibility: bool) -> tuple[float, float, float, float]:
    """Four per-observable factors from a GammaFactors, a 4-sequence or a scalar.

    Plain numbers are checked for feasibility unless ``enforce_feasibility`` is
    False, in which case only ``|gamma| <= 1`` is required: the kernel algebra
    itself does not depend on the measurement being realizable.
    """
    if isinstance(gammas, GammaFactors):
        return gammas.as_tuple()
    if isinstance(gammas, (int, float)):
        gammas = (gammas,) * 4
    gammas = tuple(float(g) for g in gammas)
    if len(gammas) != 4:
        raise DomainError(f"need four gamma factors, got {len(gammas)}")
    if enforce_feasibility:
        return GammaFactors(*gammas).as_tuple()
    return tuple(_check_gamma(g) for g in gammas)


def forward_joint_kernel(gammas, xi, xi_prime, enforce_feasibility: bool = True) -> float:
    """Product kernel ``p(xi'|xi)`` of the four independent channels."""
    outcome_index(xi), outcome_index(xi_prime)
    gs = _joint_gammas(gammas, enforce_feasibility)
    return math.prod(forward_kernel(g, k, kp) for g, k, kp in zip(gs, xi, xi_prime))


def inverse_joint_kernel(gammas, xi, xi_prime, enforce_feasibility: bool = True) -> float:
    outcome_index(xi), outcome_index(xi_prime)
    gs = _joint_gammas(gammas, enforce_feasibility)
    return math.prod(inverse_kernel(g, k, kp) for g, k, kp in zip(gs, xi, xi_prime))


def forward_joint_kernel_matrix(gammas, enforce_feasibility: bool = True) -> np.ndarray:
    """16x16 matrix ``M[xi', xi]`` over :data:`OUTCOMES`; columns sum to one."""
    gs = _joint_gammas(gammas, enforce_feasibility)
    return reduce(np.kron, (forward_kernel_matrix(g) for g in gs))


def inverse_joint_kernel_matrix(gammas, enforce_feasibility: bool = True) -> np.ndarray:
    """16x16 matrix ``M[xi, xi']``, the exact inverse of the forward matrix."""
    gs = _joint_gammas(gammas, enforce_feasibility)
    return reduce(np.kron, (inverse_kernel_matrix(g) for g in gs))


def apply_joint_noise(joint, gammas, enforce_feasibility: bool = True) -> JointDistribution16:
    p = joint.probabilities if isinstance(joint, JointDistribution16) else joint
    m = forward_joint_kernel_matrix(gammas, enforce_feasibility)
    return JointDistribution16(m @ np.asarray(p, float))


def invert_joint(noisy: JointDistribution16, gammas, enforce_feasibility: bool = True) -> QuasiDistribution16:
    """Quasi-distribution of the noiseless (x, y, u, v) recovered from noisy data."""
    gs = _joint_gammas(gammas, enforce_feasibility)
    for g in gs:
        _check_invertible(g)
    return QuasiDistribution16(inverse_joint_kernel_matrix(gs, False) @ noisy.probabilities)


__all__ = [
    "GammaFactors",
    "OUTCOMES",
    "apply_joint_noise",
    "apply_noise",
    "forward_joint_kernel",
    "forward_joint_kernel_matrix",
    "forward_kernel",
    "forward_kernel_matrix",
    "inverse_joint_kernel",
    "inverse_joint_kernel_matrix",
    "inverse_kernel",
    "inverse_kernel_matrix",
    "invert_joint",
    "invert_marginal",
    "noisy_variance",
]
