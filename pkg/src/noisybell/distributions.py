"""Value types for dichotomic and four-outcome (x, y, u, v) distributions.

Four-tuples are indexed in the order of ``itertools.product((1, -1), repeat=4)``,
i.e. index 0 is (+1, +1, +1, +1) and x is the most significant position.  This
ordering matches ``np.kron`` of 2x2 kernels whose row/column 0 is outcome +1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

OUTCOMES: tuple[tuple[int, int, int, int], ...] = tuple(
    itertools.product((1, -1), repeat=4)
)
SIGNS = (1, -1)

PROB_TOL = 1e-12
JOINT_SUM_TOL = 1e-10


def outcome_index(xi) -> int:
    """Position of the four-tuple ``xi`` in :data:`OUTCOMES`."""
    xi = tuple(int(k) for k in xi)
    if len(xi) != 4 or any(k not in SIGNS for k in xi):
        raise DomainError(f"outcome must be a 4-tuple of +/-1, got {xi!r}")
    idx = 0
    for k in xi:
        idx = 2 * idx + (0 if k == 1 else 1)
    return idx


def _check_sign(kappa) -> int:
    if kappa not in SIGNS:
        raise DomainError(f"dichotomic outcome must be +1 or -1, got {kappa!r}")
    return int(kappa)


@dataclass(frozen=True)
class BinaryDistribution:
    """Probabilities of the outcomes +1 and -1 of a dichotomic observable."""

    p_plus: float
    p_minus: float

    def __post_init__(self):
        for p in (self.p_plus, self.p_minus):
            if not (-PROB_TOL <= p <= 1 + PROB_TOL):
                raise DomainError(f"probability out of [0, 1]: {p}")
        if abs(self.p_plus + self.p_minus - 1) > PROB_TOL:
            raise DomainError(
                f"probabilities must sum to 1, got {self.p_plus + self.p_minus}"
            )

    @classmethod
    def from_mean(cls, mean: float) -> "BinaryDistribution":
        if abs(mean) > 1 + PROB_TOL:
            raise DomainError(f"mean of a +/-1 variable must lie in [-1, 1], got {mean}")
        return cls(0.5 * (1 + mean), 0.5 * (1 - mean))

    @property
    def mean(self) -> float:
        return self.p_plus - self.p_minus

    def as_array(self) -> np.ndarray:
        return np.array([self.p_plus, self.p_minus])

    def __getitem__(self, kappa: int) -> float:
        return self.p_plus if _check_sign(kappa) == 1 else self.p_minus


@dataclass(frozen=True)
class SignedBinaryDistribution:
    """Unit-sum weights on +/-1 that may be negative (an inverted marginal)."""

    q_plus: float
    q_minus: float

    def __post_init__(self):
        if abs(self.q_plus + self.q_minus - 1) > PROB_TOL:
            raise DomainError(
                f"weights must sum to 1, got {self.q_plus + self.q_minus}"
            )

    @property
    def mean(self) -> float:
        return self.q_plus - self.q_minus

    @property
    def is_negative(self) -> bool:
        return min(self.q_plus, self.q_minus) < -PROB_TOL

    def as_array(self) -> np.ndarray:
        return np.array([self.q_plus, self.q_minus])

    def __getitem__(self, kappa: int) -> float:
        return self.q_plus if _check_sign(kappa) == 1 else self.q_minus


class JointDistribution16:
    """Bona fide distribution over the 16 outcomes (x', y', u', v').

    Entries down to ``-1e-12`` are treated as rounding and clamped to zero.
    """

    __slots__ = ("_p",)

    def __init__(self, probabilities):
        p = np.asarray(probabilities, dtype=float).reshape(-1)
        if p.shape != (16,):
            raise DomainError(f"expected 16 probabilities, got {p.size}")
        if not np.all(np.isfinite(p)):
            raise DomainError("probabilities must be finite")
        if p.min() < -PROB_TOL:
            raise DomainError(f"negative probability {p.min():.3g}")
        if abs(p.sum() - 1) > JOINT_SUM_TOL:
            raise DomainError(f"probabilities sum to {p.sum():.15g}, not 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        self._p = p

    @property
    def probabilities(self) -> np.ndarray:
        return self._p

    def __getitem__(self, xi) -> float:
        return float(self._p[outcome_index(xi)])

    def __iter__(self):
        return iter(zip(OUTCOMES, self._p))

    def __repr__(self):
        return f"JointDistribution16({self._p.tolist()!r})"


class QuasiDistribution16:
    """Unit-sum signed measure over the 16 outcomes (x, y, u, v)."""

    __slots__ = ("_q",)

    def __init__(self, weights):
        q = np.asarray(weights, dtype=float).reshape(-1)
        if q.shape != (16,):
            raise DomainError(f"expected 16 weights, got {q.size}")
        if abs(q.sum() - 1) > JOINT_SUM_TOL:
            raise DomainError(f"weights sum to {q.sum():.15g}, not 1")
        q = q.copy()
        q.setflags(write=False)
        self._q = q

    @property
    def weights(self) -> np.ndarray:
        return self._q

    @property
    def min_entry(self) -> float:
        return float(self._q.min())

    @property
    def is_negative(self) -> bool:
        return self.min_entry < -PROB_TOL

    def __getitem__(self, xi) -> float:
        return float(self._q[outcome_index(xi)])

    def __iter__(self):
        return iter(zip(OUTCOMES, self._q))

    def __repr__(self):
        return f"QuasiDistribution16({self._q.tolist()!r})"
