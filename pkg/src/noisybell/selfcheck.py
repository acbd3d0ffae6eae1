"""Invariant suites run by ``noisybell selfcheck``."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bell, kernels, montecarlo, quantum
from .distributions import BinaryDistribution, JointDistribution16

SQRT2 = math.sqrt(2.0)
GAMMA = 1 / SQRT2


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str


def kernel_composition() -> SuiteResult:
    worst = 0.0
    for g in np.linspace(-1, 1, 41):
        if g == 0:
            continue
        inv = kernels.inverse_kernel_matrix(g) @ kernels.forward_kernel_matrix(g)
        resid = np.max(np.abs(inv - np.eye(2)))
        worst = max(worst, resid)
    return SuiteResult("kernel composition", worst < 1e-12, f"max residual {worst:.3g}")


def forward_stochastic() -> SuiteResult:
    worst = 0.0
    for g in np.linspace(-1, 1, 41):
        m = kernels.forward_kernel_matrix(g)
        worst = max(worst, np.max(np.abs(m.sum(axis=0) - 1)))
        if m.min() < 0:
            return SuiteResult("forward stochasticity", False, f"negative entry at gamma={g}")
    return SuiteResult("forward stochasticity", worst < 1e-12, f"max column-sum error {worst:.3g}")


def mean_contraction() -> SuiteResult:
    worst = 0.0
    for p, g in itertools.product(np.linspace(0, 1, 21), np.linspace(-1, 1, 21)):
        d = BinaryDistribution(p, 1 - p)
        worst = max(worst, abs(kernels.apply_noise(d, g).mean - g * d.mean))
    return SuiteResult("mean contraction", worst < 1e-12, f"max error {worst:.3g}")


def joint_round_trip(seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for g in (0.5, GAMMA, 0.9):
        for _ in range(100):
            p = JointDistribution16(rng.dirichlet(np.ones(16)))
            noisy = kernels.apply_joint_noise(p, g, enforce_feasibility=False)
            back = kernels.invert_joint(noisy, g, enforce_feasibility=False)
            worst = max(worst, np.max(np.abs(back.weights - p.probabilities)))
    return SuiteResult("joint round trip", worst <= 1e-12, f"max residual {worst:.3g}")


def quantum_chain() -> SuiteResult:
    state, settings = quantum.singlet(), quantum.chsh_optimal_settings()
    S = quantum.chsh_value(state, settings)
    joint = quantum.noisy_joint_distribution(state, settings, kernels.GammaFactors.equal(GAMMA))
    s_err = abs(S - 2 * SQRT2)
    mean_err = abs(quantum.noisy_mean_s(joint) - SQRT2)
    marg_err = max(
        np.max(np.abs(
            quantum.marginal_of(joint, k).as_array()
            - kernels.apply_noise(quantum.exact_marginal(state, settings, k), GAMMA).as_array()
        ))
        for k in quantum.OBSERVABLES
    )
    ok = s_err <= 1e-9 and mean_err <= 1e-10 and marg_err <= 1e-10
    return SuiteResult(
        "quantum chain", ok,
        f"|S-2sqrt2|={s_err:.3g}, |<s'>-sqrt2|={mean_err:.3g}, marginal error {marg_err:.3g}",
    )


def negativity_criterion() -> SuiteResult:
    mismatches = sum(
        bell.s_quasi_distribution(S).is_negative != (abs(S) > 2)
        for S in np.linspace(-4, 4, 401)
    )
    return SuiteResult("s negativity <=> |S| > 2", mismatches == 0, f"{mismatches} mismatches on 401 S values")


def n1_universality() -> SuiteResult:
    failures = 0
    for g2 in np.arange(1, 10) / 10:
        g = math.sqrt(g2)
        for S in np.linspace(-2 * SQRT2, 2 * SQRT2, 21):
            if abs(g2 * S) > 2:
                continue  # no s' law exists here
            failures += bell.exact_violation_probability(1, S, g) != 1.0
    return SuiteResult("N=1 universality", failures == 0, f"{failures} failures")


def gaussian_agreement() -> SuiteResult:
    worst = max(
        abs(bell.gaussian_violation_probability(N, S, GAMMA)
            - bell.exact_violation_probability(N, S, GAMMA))
        for S in (0.0, 2.0, 2 * SQRT2)
        for N in range(10, 201)
    )
    return SuiteResult("gaussian vs exact", worst <= 0.05, f"sup gap {worst:.4f}")


def route_equivalence() -> SuiteResult:
    mismatches = 0
    for S, g2, N in itertools.product((0.0, 2.0, 2 * SQRT2), (0.3, 0.5, 0.7), (1, 2, 7, 10, 100)):
        mismatches += not bell.route_equivalence_check(N, S, math.sqrt(g2))
    return SuiteResult("route equivalence", mismatches == 0, f"{mismatches} mismatches")


def monte_carlo_smoke() -> SuiteResult:
    dist = bell.s_prime_distribution(0.0, GAMMA)
    res = montecarlo.estimate_violation_rate(montecarlo.SimulationSpec(2, 20000, 1, dist), GAMMA)
    band = montecarlo.three_sigma(0.5, 20000)
    one = montecarlo.estimate_violation_rate(montecarlo.SimulationSpec(1, 1000, 1, dist), GAMMA)
    ok = abs(res.empirical_violation_rate - 0.5) <= band and one.empirical_violation_rate == 1.0
    return SuiteResult(
        "monte carlo", ok,
        f"N=2 rate {res.empirical_violation_rate:.4f} (3sigma {band:.4f}), N=1 rate {one.empirical_violation_rate}",
    )


SUITES: tuple[Callable[[], SuiteResult], ...] = (
    kernel_composition,
    forward_stochastic,
    mean_contraction,
    joint_round_trip,
    quantum_chain,
    negativity_criterion,
    n1_universality,
    gaussian_agreement,
    route_equivalence,
    monte_carlo_smoke,
)


def run_all() -> list[SuiteResult]:
    results = []
    for suite in SUITES:
        try:
            results.append(suite())
        except Exception as exc:  # a crashing suite is a failing suite
            results.append(SuiteResult(suite.__name__, False, f"{type(exc).__name__}: {exc}"))
    return results
