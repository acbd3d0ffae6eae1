"""Finite-N statistics of the noisy CHSH test.

Each run of the noisy joint measurement yields ``s' = x'u' - x'v' + y'u' + y'v'``,
which can only be +2 or -2.  With equal accuracy factors gamma the mean is
``S' = gamma**2 * S``, so the local bound |S| <= 2 becomes |S'| <= 2 gamma**2.
After N runs with n results equal to +2 the sample mean is
``S'_N = 2 (2n/N - 1)``, and the bound is violated unless
``n_c <= n <= n_f``.

The same question can be asked of the rescaled variable ``s'/gamma**2`` against
the noiseless bound 2; both routes select the same n and give the same
probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.special import gammaln

from .distributions import PROB_TOL, _check_sign
from .errors import DegenerateDistributionError, DomainError, SingularInversionError
from .kernels import GammaFactors, _check_gamma

# Relative slack when comparing a statistic with its bound.  Only affects
# outcomes that sit on the bound in exact arithmetic but miss it by rounding.
BOUND_RTOL = 1e-9


@dataclass(frozen=True)
class SPrimeDistribution:
    """Law of s' on {+2, -2}."""

    p_plus2: float
    p_minus2: float

    def __post_init__(self):
        for p in (self.p_plus2, self.p_minus2):
            if not (-PROB_TOL <= p <= 1 + PROB_TOL):
                raise DomainError(f"probability out of [0, 1]: {p}")
        if abs(self.p_plus2 + self.p_minus2 - 1) > PROB_TOL:
            raise DomainError("s' probabilities must sum to 1")
        object.__setattr__(self, "p_plus2", min(1.0, max(0.0, self.p_plus2)))
        object.__setattr__(self, "p_minus2", min(1.0, max(0.0, self.p_minus2)))

    @property
    def mean(self) -> float:
        return 2 * (self.p_plus2 - self.p_minus2)


@dataclass(frozen=True)
class SQuasiDistribution:
    """Signed law of the noiseless s on {+2, -2}."""

    q_plus2: float
    q_minus2: float

    @property
    def is_negative(self) -> bool:
        return min(self.q_plus2, self.q_minus2) < 0


@dataclass(frozen=True)
class TrialCounts:
    n: int
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or int(self.n) != self.n:
            raise DomainError("trial counts must be integers")
        if self.N < 0 or not 0 <= self.n <= self.N:
            raise DomainError(f"need 0 <= n <= N, got n={self.n}, N={self.N}")


@dataclass(frozen=True)
class FiniteNReport:
    n_trials: int
    s_param: float
    gamma: float
    n_c: int
    n_f: int
    p_violation_exact: float
    p_violation_gauss: float | None


def _equal_gamma(gamma) -> float:
    if isinstance(gamma, GammaFactors):
        return gamma.common
    return _check_gamma(gamma)


def _check_trials(N) -> int:
    if int(N) != N or N < 1:
        raise DomainError(f"number of trials must be a positive integer, got {N!r}")
    return int(N)


def s_of_outcome(xi) -> int:
    """``x u - x v + y u + y v`` for a four-tuple of +/-1."""
    if len(xi) != 4:
        raise DomainError(f"outcome must have four components, got {xi!r}")
    x, y, u, v = (_check_sign(k) for k in xi)
    return x * u - x * v + y * u + y * v


def noisy_bound(gamma) -> float:
    g = _equal_gamma(gamma)
    return 2 * g * g


def s_prime_distribution(S: float, gamma) -> SPrimeDistribution:
    """``p(s' = +/-2) = 1/2 +/- gamma**2 S / 4``."""
    g = _equal_gamma(gamma)
    mean = g * g * S
    if not math.isfinite(mean) or abs(mean) > 2 + PROB_TOL:
        raise DomainError(f"|gamma^2 S| = {abs(mean)} exceeds 2; no valid distribution")
    return SPrimeDistribution(0.5 + mean / 4, 0.5 - mean / 4)


def _log_binom(N: int, n: int) -> float:
    return math.lgamma(N + 1) - math.lgamma(n + 1) - math.lgamma(N - n + 1)


def _log_pmf(n: int, N: int, p_plus: float, p_minus: float) -> float:
    out = _log_binom(N, n)
    for k, p in ((n, p_plus), (N - n, p_minus)):
        if k:
            if p <= 0:
                return -math.inf
            out += k * math.log(p)
    return out


def binomial_pmf(counts: TrialCounts, dist: SPrimeDistribution) -> float:
    """``C(N, n) p+^n p-^(N-n)`` evaluated through log-gamma."""
    return math.exp(_log_pmf(counts.n, counts.N, dist.p_plus2, dist.p_minus2))


def _sum_pmf(ns: Iterable[int], N: int, dist: SPrimeDistribution) -> float:
    n = np.fromiter(ns, dtype=np.int64)
    if n.size == 0:
        return 0.0
    logpmf = gammaln(N + 1) - gammaln(n + 1) - gammaln(N - n + 1)
    for k, p in ((n, dist.p_plus2), (N - n, dist.p_minus2)):
        if p > 0:
            logpmf = logpmf + k * math.log(p)
        else:
            logpmf = np.where(k > 0, -np.inf, logpmf)
    terms = np.sort(np.exp(logpmf))[::-1]
    return math.fsum(terms.tolist())


def finite_mean_noisy(counts: TrialCounts) -> float:
    """``S'_N = 2 (2n/N - 1)``."""
    if counts.N == 0:
        raise DomainError("no trials")
    return 2 * (2 * counts.n / counts.N - 1)


def finite_mean_inverted(counts: TrialCounts, gamma) -> float:
    """``S_N = S'_N / gamma**2``, the mean of the rescaled variable."""
    g = _equal_gamma(gamma)
    if g == 0:
        raise SingularInversionError("cannot rescale by gamma^2 = 0")
    return finite_mean_noisy(counts) / (g * g)


def violation_thresholds(N: int, gamma) -> tuple[int, int]:
    """``(n_c, n_f)``: the non-violating counts are ``n_c <= n <= n_f``.

    ``n_c > n_f`` means every outcome violates the bound.
    """
    N = _check_trials(N)
    half_width = _equal_gamma(gamma) ** 2 * (1 + BOUND_RTOL)
    return math.ceil(0.5 * N * (1 - half_width)), math.floor(0.5 * N * (1 + half_width))


def _exceeds(stat: float, bound: float) -> bool:
    return abs(stat) > bound * (1 + BOUND_RTOL)


def violates_noisy(counts: TrialCounts, gamma) -> bool:
    """``|S'_N| > 2 gamma**2``."""
    return _exceeds(finite_mean_noisy(counts), noisy_bound(gamma))


def violates_inverted(counts: TrialCounts, gamma) -> bool:
    """``|S_N| > 2``."""
    return _exceeds(finite_mean_inverted(counts, gamma), 2.0)


def exact_violation_probability(N: int, S: float, gamma) -> float:
    """Probability that N trials give ``|S'_N| > 2 gamma**2``."""
    N = _check_trials(N)
    dist = s_prime_distribution(S, gamma)
    n_c, n_f = violation_thresholds(N, gamma)
    return _probability_outside(range(max(n_c, 0), min(n_f, N) + 1), N, dist)


def _probability_outside(window: Iterable[int], N: int, dist: SPrimeDistribution) -> float:
    """Mass of the counts not in ``window``.

    Equals ``1 - sum(window)``; whichever side carries less mass is summed
    directly so that tiny probabilities near 0 or 1 keep their precision.
    """
    inside_ns = sorted(set(window))
    inside_set = set(inside_ns)
    inside = _sum_pmf(inside_ns, N, dist)
    if inside < 0.5:
        return min(1.0, max(0.0, 1.0 - inside))
    outside = _sum_pmf((n for n in range(N + 1) if n not in inside_set), N, dist)
    return min(1.0, max(0.0, outside))


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def gaussian_moments(N: int, S: float, gamma) -> tuple[float, float]:
    """Mean and variance of the Gaussian stand-in for the count of +2 results."""
    N = _check_trials(N)
    g2 = _equal_gamma(gamma) ** 2
    mu = 0.25 * N * (2 + g2 * S)
    var = N / 16 * (4 - g2 * g2 * S * S)
    return mu, var


def gaussian_violation_probability(
    N: int, S: float, gamma, continuity_correction: bool = True
) -> float:
    """Gaussian approximation of :func:`exact_violation_probability`.

    The binomial count is replaced by a normal density with mean
    ``N (2 + gamma**2 S) / 4`` and variance ``N (4 - gamma**4 S**2) / 16``, and the
    non-violation mass is its integral over the window ``[n_c, n_f]``.  With
    ``continuity_correction`` (the default) the window is widened to
    ``[n_c - 1/2, n_f + 1/2]`` so that each integer count contributes a full
    unit cell; without it the endpoint counts are half-weighted and the
    approximation is off by up to ~0.12 at N = 10.
    """
    s_prime_distribution(S, gamma)
    mu, var = gaussian_moments(N, S, gamma)
    if var <= 0:
        raise DegenerateDistributionError(
            "|gamma^2 S| = 2 gives a point-mass law; the Gaussian form does not apply"
        )
    n_c, n_f = violation_thresholds(N, gamma)
    if n_c > n_f:
        return 1.0
    pad = 0.5 if continuity_correction else 0.0
    sigma = math.sqrt(var)
    a, b = (n_c - pad - mu) / sigma, (n_f + pad - mu) / sigma
    # take the difference in whichever tail keeps both terms small
    if a > 0:
        inside = _normal_cdf(-a) - _normal_cdf(-b)
    else:
        inside = _normal_cdf(b) - _normal_cdf(a)
    return min(1.0, max(0.0, 1.0 - inside))


def finite_n_report(
    N: int, S: float, gamma, continuity_correction: bool = True
) -> FiniteNReport:
    n_c, n_f = violation_thresholds(N, gamma)
    try:
        p_gauss = gaussian_violation_probability(N, S, gamma, continuity_correction)
    except DegenerateDistributionError:
        p_gauss = None
    return FiniteNReport(
        n_trials=int(N),
        s_param=float(S),
        gamma=_equal_gamma(gamma),
        n_c=n_c,
        n_f=n_f,
        p_violation_exact=exact_violation_probability(N, S, gamma),
        p_violation_gauss=p_gauss,
    )


def s_quasi_distribution(S: float) -> SQuasiDistribution:
    """``q(s = +/-2) = 1/2 +/- S/4``; negative exactly when |S| > 2."""
    if not math.isfinite(S) or abs(S) > 4:
        raise DomainError(f"|S| must be <= 4, got {S}")
    return SQuasiDistribution(0.5 + S / 4, 0.5 - S / 4)


def violating_counts(N: int, gamma, route: str = "noisy") -> frozenset[int]:
    """Counts n whose sample mean violates the bound of the chosen route."""
    N = _check_trials(N)
    pred: Callable[[TrialCounts, float], bool] = {
        "noisy": violates_noisy,
        "inverted": violates_inverted,
    }[route]
    return frozenset(n for n in range(N + 1) if pred(TrialCounts(n, N), gamma))


def route_violation_probability(N: int, S: float, gamma, route: str) -> float:
    dist = s_prime_distribution(S, gamma)
    bad = violating_counts(N, gamma, route)
    return _probability_outside((n for n in range(N + 1) if n not in bad), N, dist)


def route_equivalence_check(N: int, S: float, gamma) -> bool:
    """True when the noisy and inverted routes pick the same n and probability.

    Both are also compared with the threshold window used by
    :func:`exact_violation_probability`.
    """
    if _equal_gamma(gamma) == 0:
        raise SingularInversionError("the inverted route needs gamma != 0")
    noisy = violating_counts(N, gamma, "noisy")
    inverted = violating_counts(N, gamma, "inverted")
    n_c, n_f = violation_thresholds(N, gamma)
    window = frozenset(n for n in range(N + 1) if not n_c <= n <= n_f)
    if not noisy == inverted == window:
        return False
    p_noisy = route_violation_probability(N, S, gamma, "noisy")
    p_inverted = route_violation_probability(N, S, gamma, "inverted")
    return p_noisy == p_inverted == exact_violation_probability(N, S, gamma)
