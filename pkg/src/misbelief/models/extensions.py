"""Scenarios beyond the basic society: correlated errors, personal contact, composite attributes."""

from dataclasses import dataclass
from enum import Enum
from typing import Any

from typing_extensions import Self

import numpy as np

from misbelief.core.errors import InvalidModel, InvalidScenario
from misbelief.core.linalg import FloatArray, as_matrix, as_vector, check_positive_definite, frozen


class GroupTag(str, Enum):
    """Endogenous group relation implied by correlated recognition errors."""

    IN_GROUP = "in-group"  # errors positively correlated with the agent's
    OUT_GROUP = "out-group"  # negatively correlated
    NEUTRAL = "neutral"


def _positive_scalar(value: float, name: str) -> float:
    number = float(value)
    if not np.isfinite(number) or number <= 0:
        raise InvalidScenario(f"{name} must be strictly positive", invariant=f"{name} > 0", value=number)
    return number


def _finite_scalar(value: float, name: str) -> float:
    number = float(value)
    if not np.isfinite(number):
        raise InvalidScenario(f"{name} must be finite", name=name)
    return number


def _per_individual(value: Any, name: str, individuals: int) -> FloatArray:
    """A scalar or length-I vector of variances, as a length-I vector."""
    values = as_vector(value, name)
    if values.shape[0] not in (1, individuals):
        raise InvalidScenario(f"{name} must be a scalar or have one entry per individual", I=individuals)
    return np.resize(values, individuals)


def _agent_index(agent: int, individuals: int) -> int:
    if not 0 <= agent < individuals:
        raise InvalidScenario("agent index out of range", agent=agent, I=individuals)
    return int(agent)


@dataclass(frozen=True, eq=False)
class CorrelatedScenario:
    """Individuals whose recognition errors are correlated (no explicit groups)."""

    Sigma_q: FloatArray
    A: FloatArray
    agent: int
    a_tilde_i: float

    @classmethod
    def create(cls, Sigma_q: Any, A: Any, agent: int, a_tilde_i: float) -> Self:
        covariance = as_matrix(Sigma_q, "Sigma_q")
        calibers = as_vector(A, "A")
        if covariance.shape != (calibers.shape[0], calibers.shape[0]):
            raise InvalidScenario(
                "Sigma_q must be I×I with I the number of calibers",
                shape=covariance.shape,
                I=calibers.shape[0],
            )
        try:
            check_positive_definite(covariance, "Sigma_q")
        except InvalidModel as e:
            raise InvalidScenario(e.message, **e.details) from e
        return cls(
            Sigma_q=frozen((covariance + covariance.T) / 2.0),
            A=frozen(calibers),
            agent=_agent_index(agent, calibers.shape[0]),
            a_tilde_i=_finite_scalar(a_tilde_i, "a_tilde_i"),
        )

    @property
    def I(self) -> int:  # noqa: E743
        return int(self.A.shape[0])

    @property
    def delta(self) -> float:
        return self.a_tilde_i - float(self.A[self.agent])


@dataclass(frozen=True)
class CorrelatedBiases:
    """Caliber biases, covariance bias and endogenous group tags under correlated errors."""

    caliber_bias: FloatArray
    sigma_bias: FloatArray
    group_tags: tuple[GroupTag, ...]


@dataclass(frozen=True, eq=False)
class ContactScenario:
    """One group; the agent also observes every individual's caliber directly.

    Each individual is a member (c = 1) or a competitor (c = −1) of the
    group. ``v_q`` and ``v_a`` hold one variance per individual; the closed
    form needs them all equal, anything else goes through the numeric
    oracle.
    """

    c: FloatArray
    v_q: FloatArray
    v_a: FloatArray
    v_eta: float
    A: FloatArray
    Theta: float
    agent: int
    a_tilde_i: float

    @classmethod
    def create(
        cls,
        c: Any,
        v_q: Any,
        v_a: Any,
        v_eta: float,
        A: Any,
        Theta: float,
        agent: int,
        a_tilde_i: float,
    ) -> Self:
        signs = as_vector(c, "c")
        if signs.size == 0 or not np.all(np.isin(signs, (-1.0, 1.0))):
            raise InvalidScenario("c entries must be -1 or 1", invariant="c_j in {-1, 1}")
        individuals = signs.shape[0]
        calibers = as_vector(A, "A")
        recognition = _per_individual(v_q, "v_q", individuals)
        direct = _per_individual(v_a, "v_a", individuals)
        if calibers.shape[0] != individuals:
            raise InvalidScenario("A must have one entry per individual", I=individuals)
        for values, name in ((recognition, "v_q"), (direct, "v_a")):
            if np.any(values <= 0):
                raise InvalidScenario(f"{name} must be strictly positive", invariant=f"{name} > 0")
        return cls(
            c=frozen(signs),
            v_q=frozen(recognition),
            v_a=frozen(direct),
            v_eta=_positive_scalar(v_eta, "v_eta"),
            A=frozen(calibers),
            Theta=_finite_scalar(Theta, "Theta"),
            agent=_agent_index(agent, individuals),
            a_tilde_i=_finite_scalar(a_tilde_i, "a_tilde_i"),
        )

    @property
    def I(self) -> int:  # noqa: E743
        return int(self.c.shape[0])

    @property
    def delta(self) -> float:
        return self.a_tilde_i - float(self.A[self.agent])

    @property
    def homogeneous(self) -> bool:
        """All individuals share one v_q and one v_a."""
        return bool(np.all(self.v_q == self.v_q[0]) and np.all(self.v_a == self.v_a[0]))

    def resized(self, individuals: int) -> "ContactScenario":
        """Same society with ``individuals`` people, tiling c, A and the variances."""
        if individuals <= self.agent:
            raise InvalidScenario("resizing would drop the agent", I=individuals, agent=self.agent)

        def tile(values: FloatArray) -> FloatArray:
            return np.resize(values, individuals)

        return ContactScenario.create(
            tile(self.c),
            tile(self.v_q),
            tile(self.v_a),
            self.v_eta,
            tile(self.A),
            self.Theta,
            self.agent,
            self.a_tilde_i,
        )


@dataclass(frozen=True)
class ContactBiases:
    """Bias about the single group's discrimination and about each caliber."""

    theta_bias: float
    caliber_bias: FloatArray


@dataclass(frozen=True)
class RicherObservations:
    """Ratios of the agent's biases to their overconfidence with direct caliber signals.

    Four individuals: the agent and one fellow member, then two competitors
    whose recognition and direct caliber signals have variances v_q_o and
    v_a_o.
    """

    ratio_a3: float
    ratio_a4: float
    ratio_theta: float
    delta: float

    @property
    def bias_a3(self) -> float:
        return self.ratio_a3 * self.delta

    @property
    def bias_a4(self) -> float:
        return self.ratio_a4 * self.delta

    @property
    def bias_theta(self) -> float:
        return self.ratio_theta * self.delta


@dataclass(frozen=True)
class MultiAttributeScenario:
    """Two individuals whose recognition depends on talent a_j and morality m_j.

    Recognition reveals only the composite a_j + m_j; an extra signal
    b_2 = 2a_2 + m_2 separates talent from morality for individual 2. Error
    variances other than v_q1 and v_eta1 are 1. ``Delta1`` is the agent's
    overconfidence about a_1 + m_1.
    """

    a2: float
    m1: float
    m2: float
    theta1: float
    v_q1: float
    v_eta1: float
    Delta1: float
    a1: float = 0.0

    def __post_init__(self) -> None:
        for name in ("a1", "a2", "m1", "m2", "theta1", "Delta1"):
            _finite_scalar(getattr(self, name), name)
        _positive_scalar(self.v_q1, "v_q1")
        _positive_scalar(self.v_eta1, "v_eta1")


@dataclass(frozen=True)
class MultiAttributeBiases:
    """Long-run biases about the out-group's talent, morality and discrimination."""

    bias_a2: float
    bias_m1: float
    bias_theta1: float


@dataclass(frozen=True)
class RicherObservationsScenario:
    """Out-group recognition and direct-signal variances plus the agent's overconfidence."""

    v_q_o: float
    v_a_o: float
    Delta: float

    def __post_init__(self) -> None:
        _positive_scalar(self.v_q_o, "v_q_o")
        _positive_scalar(self.v_a_o, "v_a_o")
        _finite_scalar(self.Delta, "Delta")
