"""Two-qubit states, Bloch-vector settings and the noisy joint measurement.

The noisy joint measurement is realized as a product POVM.  Party A measures
X and Y at once with effects

    E_A(x', y') = (1 + gamma_x x' a_x.sigma + gamma_y y' a_y.sigma) / 4

and party B does the same for U and V.  Each single-observable marginal is
then the unbiased noise channel applied to the exact marginal, and
cross-party correlators contract by ``gamma_K * gamma_L``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .distributions import OUTCOMES, BinaryDistribution, JointDistribution16
from .errors import DomainError
from .kernels import GammaFactors

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIGEN_FLOOR = -1e-10
UNIT_TOL = 1e-12

IDENTITY = np.eye(2, dtype=complex)
PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

OBSERVABLES = ("X", "Y", "U", "V")


def _unit_vector(v, name: str = "direction") -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise DomainError(f"{name} must be a finite 3-vector, got {v!r}")
    if abs(np.linalg.norm(v) - 1) > UNIT_TOL:
        raise DomainError(f"{name} must have unit norm, |v| = {np.linalg.norm(v)!r}")
    return v


def spin_operator(direction) -> np.ndarray:
    """``a . sigma`` for a unit Bloch vector ``a``."""
    a = _unit_vector(direction)
    return np.einsum("i,ijk->jk", a.astype(complex), PAULI)


class TwoQubitState:
    """A validated 4x4 density matrix (qubit A is the left tensor factor)."""

    __slots__ = ("_rho",)

    def __init__(self, rho):
        rho = np.array(rho, dtype=complex)
        if rho.shape != (4, 4):
            raise DomainError(f"density matrix must be 4x4, got shape {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise DomainError("density matrix has non-finite entries")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > TRACE_TOL:
            raise DomainError(f"density matrix trace is {np.trace(rho).real!r}, not 1")
        rho = 0.5 * (rho + rho.conj().T)
        lam = np.linalg.eigvalsh(rho).min()
        if lam < EIGEN_FLOOR:
            raise DomainError(f"density matrix is not positive semidefinite (eigenvalue {lam:.3g})")
        rho.setflags(write=False)
        self._rho = rho

    @classmethod
    def from_vector(cls, psi) -> "TwoQubitState":
        psi = np.asarray(psi, dtype=complex).reshape(4)
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise DomainError("state vector is zero")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    @property
    def rho(self) -> np.ndarray:
        return self._rho

    def purity(self) -> float:
        return float(np.real(np.trace(self._rho @ self._rho)))

    def expectation(self, operator) -> float:
        return float(np.real(np.trace(self._rho @ operator)))

    def __repr__(self):
        return f"TwoQubitState(purity={self.purity():.6g})"


@dataclass(frozen=True)
class MeasurementSettings:
    """Bloch directions of X, Y (party A) and U, V (party B)."""

    a_x: tuple
    a_y: tuple
    b_u: tuple
    b_v: tuple

    def __post_init__(self):
        for name in ("a_x", "a_y", "b_u", "b_v"):
            v = _unit_vector(getattr(self, name), name)
            object.__setattr__(self, name, tuple(float(c) for c in v))

    def direction(self, observable: str) -> np.ndarray:
        try:
            attr = {"X": "a_x", "Y": "a_y", "U": "b_u", "V": "b_v"}[observable.upper().rstrip("'")]
        except KeyError:
            raise DomainError(f"unknown observable {observable!r}") from None
        return np.array(getattr(self, attr))


@dataclass(frozen=True)
class Correlators:
    xu: float
    xv: float
    yu: float
    yv: float

    @property
    def chsh(self) -> float:
        return self.xu - self.xv + self.yu + self.yv


def correlator(state: TwoQubitState, dir_a, dir_b) -> float:
    """``Tr[rho (a.sigma) (x) (b.sigma)]``."""
    op = np.kron(spin_operator(dir_a), spin_operator(dir_b))
    return float(np.clip(state.expectation(op), -1.0, 1.0))


def local_mean(state: TwoQubitState, direction, party: str) -> float:
    """Exact mean of a single-party spin observable."""
    s = spin_operator(direction)
    op = np.kron(s, IDENTITY) if party == "A" else np.kron(IDENTITY, s)
    return float(np.clip(state.expectation(op), -1.0, 1.0))


def correlators(state: TwoQubitState, settings: MeasurementSettings) -> Correlators:
    return Correlators(
        xu=correlator(state, settings.a_x, settings.b_u),
        xv=correlator(state, settings.a_x, settings.b_v),
        yu=correlator(state, settings.a_y, settings.b_u),
        yv=correlator(state, settings.a_y, settings.b_v),
    )


def chsh_value(state: TwoQubitState, settings: MeasurementSettings) -> float:
    """S = <XU> - <XV> + <YU> + <YV>."""
    return correlators(state, settings).chsh


def party_effects(dir_1, dir_2, gamma_1: float, gamma_2: float) -> dict[tuple[int, int], np.ndarray]:
    """The four effects of one party's noisy joint measurement.

    Raises :class:`DomainError` if any effect has an eigenvalue below ``-1e-10``.
    """
    s1, s2 = spin_operator(dir_1), spin_operator(dir_2)
    effects = {}
    for k1, k2 in itertools.product((1, -1), repeat=2):
        e = 0.25 * (IDENTITY + gamma_1 * k1 * s1 + gamma_2 * k2 * s2)
        lam = np.linalg.eigvalsh(e).min()
        if lam < EIGEN_FLOOR:
            raise DomainError(
                f"noisy joint measurement is not a valid POVM for gammas "
                f"({gamma_1}, {gamma_2}) and these directions (effect eigenvalue {lam:.3g})"
            )
        effects[(k1, k2)] = e
    return effects


def noisy_joint_distribution(
    state: TwoQubitState, settings: MeasurementSettings, gammas: GammaFactors
) -> JointDistribution16:
    """Outcome distribution ``p'(x', y', u', v' | rho)`` of the product POVM."""
    eff_a = party_effects(settings.a_x, settings.a_y, gammas.gamma_x, gammas.gamma_y)
    eff_b = party_effects(settings.b_u, settings.b_v, gammas.gamma_u, gammas.gamma_v)
    p = np.array(
        [state.expectation(np.kron(eff_a[(x, y)], eff_b[(u, v)])) for x, y, u, v in OUTCOMES]
    )
    return JointDistribution16(p)


_AXIS = {"X": 0, "Y": 1, "U": 2, "V": 3}


def marginal_of(joint: JointDistribution16, which: str) -> BinaryDistribution:
    """Marginal of one of X', Y', U', V' (the prime is optional)."""
    key = which.upper().rstrip("'")
    if key not in _AXIS:
        raise DomainError(f"unknown observable {which!r}")
    p = joint.probabilities.reshape(2, 2, 2, 2)
    other = tuple(i for i in range(4) if i != _AXIS[key])
    p_plus, p_minus = p.sum(axis=other)
    total = p_plus + p_minus
    return BinaryDistribution(p_plus / total, p_minus / total)


def exact_marginal(state: TwoQubitState, settings: MeasurementSettings, which: str) -> BinaryDistribution:
    key = which.upper().rstrip("'")
    party = "A" if key in ("X", "Y") else "B"
    return BinaryDistribution.from_mean(local_mean(state, settings.direction(key), party))


def noisy_mean_s(joint: JointDistribution16) -> float:
    """Mean of ``s(xi') = x'u' - x'v' + y'u' + y'v'`` under ``joint``."""
    s = np.array([x * u - x * v + y * u + y * v for x, y, u, v in OUTCOMES], dtype=float)
    return float(s @ joint.probabilities)


def noisy_correlator(joint: JointDistribution16, first: str, second: str) -> float:
    i, j = _AXIS[first.upper().rstrip("'")], _AXIS[second.upper().rstrip("'")]
    prods = np.array([xi[i] * xi[j] for xi in OUTCOMES], dtype=float)
    return float(prods @ joint.probabilities)


# ---- catalogs ----------------------------------------------------------------

_SQ2 = math.sqrt(2.0)


def singlet() -> TwoQubitState:
    return TwoQubitState.from_vector([0, 1, -1, 0])


def product_00() -> TwoQubitState:
    return TwoQubitState.from_vector([1, 0, 0, 0])


def maximally_mixed() -> TwoQubitState:
    return TwoQubitState(np.eye(4) / 4)


def werner(p: float) -> TwoQubitState:
    """``p |singlet><singlet| + (1 - p) 1/4``."""
    if not 0 <= p <= 1:
        raise DomainError(f"Werner weight must lie in [0, 1], got {p}")
    return TwoQubitState(p * singlet().rho + (1 - p) * np.eye(4) / 4)


def standard_states() -> dict[str, TwoQubitState]:
    return {
        "singlet": singlet(),
        "00": product_00(),
        "maximally-mixed": maximally_mixed(),
        "werner-0.5": werner(0.5),
    }


def chsh_optimal_settings() -> MeasurementSettings:
    """Settings reaching S = 2 sqrt(2) on the singlet."""
    return MeasurementSettings(
        a_x=(0.0, 0.0, 1.0),
        a_y=(1.0, 0.0, 0.0),
        b_u=(-1 / _SQ2, 0.0, -1 / _SQ2),
        b_v=(-1 / _SQ2, 0.0, 1 / _SQ2),
    )


def all_z_settings() -> MeasurementSettings:
    z = (0.0, 0.0, 1.0)
    return MeasurementSettings(z, z, z, z)


SETTINGS_CATALOG = {
    "chsh-optimal": chsh_optimal_settings,
    "all-z": all_z_settings,
}


def resolve_state(spec) -> TwoQubitState:
    """Build a state from a catalog name or a JSON-like mapping.

    Accepted forms: ``"singlet"``, ``"00"``, ``"maximally-mixed"``,
    ``"werner:<p>"``, ``{"name": "werner", "p": 0.7}`` or
    ``{"real": [[...]] * 4, "imag": [[...]] * 4}`` (``imag`` optional).
    """
    if isinstance(spec, TwoQubitState):
        return spec
    if isinstance(spec, str):
        name, _, arg = spec.partition(":")
        spec = {"name": name, "p": float(arg)} if arg else {"name": name}
    if not isinstance(spec, Mapping):
        raise DomainError(f"cannot interpret state specification {spec!r}")
    if "name" in spec:
        name = spec["name"]
        if name == "werner":
            if "p" not in spec:
                raise DomainError("werner state needs a weight p")
            return werner(float(spec["p"]))
        builders = {"singlet": singlet, "00": product_00, "product-00": product_00,
                    "maximally-mixed": maximally_mixed}
        if name not in builders:
            raise DomainError(f"unknown state {name!r}")
        return builders[name]()
    if "real" in spec:
        re = np.asarray(spec["real"], dtype=float)
        im = np.asarray(spec.get("imag", np.zeros_like(re)), dtype=float)
        return TwoQubitState(re + 1j * im)
    raise DomainError(f"cannot interpret state specification {spec!r}")


def resolve_settings(spec) -> MeasurementSettings:
    """Settings from a catalog name or ``{"x": [...], "y": [...], "u": [...], "v": [...]}``."""
    if isinstance(spec, MeasurementSettings):
        return spec
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, Mapping):
        raise DomainError(f"cannot interpret settings specification {spec!r}")
    if "name" in spec:
        if spec["name"] not in SETTINGS_CATALOG:
            raise DomainError(f"unknown settings {spec['name']!r}")
        return SETTINGS_CATALOG[spec["name"]]()
    try:
        return MeasurementSettings(spec["x"], spec["y"], spec["u"], spec["v"])
    except KeyError as exc:
        raise DomainError(f"settings missing direction {exc.args[0]!r}") from None


def state_to_json(state: TwoQubitState) -> dict:
    return {"real": state.rho.real.tolist(), "imag": state.rho.imag.tolist()}


def settings_to_json(settings: MeasurementSettings) -> dict:
    return {"x": list(settings.a_x), "y": list(settings.a_y),
            "u": list(settings.b_u), "v": list(settings.b_v)}
