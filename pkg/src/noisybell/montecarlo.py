"""Seeded Monte Carlo replay of N-trial experiments.

Repetitions are grouped in fixed blocks of :data:`BLOCK_SIZE`.  Block ``b``
draws from a Philox stream keyed by ``SeedSequence(seed, spawn_key=(b,))``, so
results depend only on ``(seed, N, reps, source)`` and not on how many worker
processes share the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import gammaln

from .bell import SPrimeDistribution, TrialCounts, s_of_outcome, violation_thresholds
from .distributions import OUTCOMES, JointDistribution16
from .errors import DomainError

BLOCK_SIZE = 1024
BERNOULLI_MAX_N = 1000
# cap on uniforms held in memory at once
_MAX_DRAWS = 1 << 22

_S_PLUS = np.array([s_of_outcome(xi) == 2 for xi in OUTCOMES])

Source = Union[SPrimeDistribution, JointDistribution16]


@dataclass(frozen=True)
class SimulationSpec:
    N: int
    reps: int
    seed: int
    source: Source

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        if int(self.reps) != self.reps or self.reps < 1:
            raise DomainError(f"reps must be a positive integer, got {self.reps!r}")
        if not isinstance(self.source, (SPrimeDistribution, JointDistribution16)):
            raise DomainError("source must be an SPrimeDistribution or a JointDistribution16")


@dataclass(frozen=True)
class SimulationResult:
    reps: int
    violation_count: int
    empirical_violation_rate: float
    s_prime_mean: float
    s_prime_min: float
    s_prime_max: float


def block_stream(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def binomial_cdf(N: int, p_plus: float) -> np.ndarray:
    n = np.arange(N + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logpmf = gammaln(N + 1) - gammaln(n + 1) - gammaln(N - n + 1)
        logpmf = logpmf + np.where(n > 0, n * np.log(p_plus), 0.0)
        logpmf = logpmf + np.where(n < N, (N - n) * np.log1p(-p_plus), 0.0)
    cdf = np.cumsum(np.exp(logpmf))
    cdf /= cdf[-1]
    return cdf


def _bernoulli_counts(p_plus: float, N: int, size: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty(size, dtype=np.int64)
    rows = max(1, _MAX_DRAWS // N)
    for start in range(0, size, rows):
        stop = min(size, start + rows)
        out[start:stop] = (rng.random((stop - start, N)) < p_plus).sum(axis=1)
    return out


def _joint_counts(p: np.ndarray, N: int, size: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    out = np.empty(size, dtype=np.int64)
    rows = max(1, _MAX_DRAWS // N)
    for start in range(0, size, rows):
        stop = min(size, start + rows)
        idx = np.minimum(np.searchsorted(cdf, rng.random((stop - start, N)), side="right"), 15)
        out[start:stop] = _S_PLUS[idx].sum(axis=1)
    return out


def sample_counts(source: Source, N: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Counts of s' = +2 in ``size`` independent N-trial experiments."""
    if isinstance(source, JointDistribution16):
        return _joint_counts(source.probabilities, N, size, rng)
    p = source.p_plus2
    if p >= 1.0:
        return np.full(size, N, dtype=np.int64)
    if p <= 0.0:
        return np.zeros(size, dtype=np.int64)
    if N < BERNOULLI_MAX_N:
        return _bernoulli_counts(p, N, size, rng)
    cdf = binomial_cdf(N, p)
    return np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), N)


def sample_experiment(dist: Source, N: int, stream: np.random.Generator) -> TrialCounts:
    """One N-trial experiment drawn from ``stream``."""
    if N < 1:
        raise DomainError("N must be >= 1")
    return TrialCounts(int(sample_counts(dist, N, 1, stream)[0]), N)


def _run_block(task) -> tuple[int, int, int, int]:
    source, N, seed, block, size, n_c, n_f = task
    counts = sample_counts(source, N, size, block_stream(seed, block))
    violations = int(np.count_nonzero((counts < n_c) | (counts > n_f)))
    return violations, int(counts.sum()), int(counts.min()), int(counts.max())


def estimate_violation_rate(spec: SimulationSpec, gamma, workers: int = 1) -> SimulationResult:
    """Empirical frequency of ``|S'_N| > 2 gamma**2`` over ``spec.reps`` experiments."""
    n_c, n_f = violation_thresholds(spec.N, gamma)
    n_blocks = math.ceil(spec.reps / BLOCK_SIZE)
    tasks = [
        (spec.source, spec.N, spec.seed, b,
         min(BLOCK_SIZE, spec.reps - b * BLOCK_SIZE), n_c, n_f)
        for b in range(n_blocks)
    ]
    if workers > 1 and n_blocks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, tasks, chunksize=max(1, n_blocks // (4 * workers))))
    else:
        parts = [_run_block(t) for t in tasks]

    violations = sum(p[0] for p in parts)
    total_n = sum(p[1] for p in parts)
    n_min = min(p[2] for p in parts)
    n_max = max(p[3] for p in parts)
    N = spec.N
    return SimulationResult(
        reps=spec.reps,
        violation_count=violations,
        empirical_violation_rate=violations / spec.reps,
        s_prime_mean=2 * (2 * total_n / (N * spec.reps) - 1),
        s_prime_min=2 * (2 * n_min / N - 1),
        s_prime_max=2 * (2 * n_max / N - 1),
    )


def three_sigma(p: float, reps: int) -> float:
    return 3 * math.sqrt(max(p * (1 - p), 0.0) / reps)
