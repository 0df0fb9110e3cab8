"""Group/discrimination society model and the reports derived from it."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from typing_extensions import Self

import numpy as np
import numpy.typing as npt

from misbelief.core.errors import InvalidScenario
from misbelief.core.linalg import FloatArray, as_vector, frozen

IntArray = npt.NDArray[np.int64]


class Classification(str, Enum):
    """How the agent misjudges an individual's caliber."""

    IN_GROUP_FAVORITISM = "in-group-favoritism"  # overestimates
    OUT_GROUP_DEROGATION = "out-group-derogation"  # underestimates
    UNBIASED = "unbiased"


def relationship_matrix(value: Any, rows: int | None = None) -> IntArray:
    """Coerce a group-relationship matrix, checking entries are in {-1, 0, 1}."""
    array = np.array(value, dtype=np.float64)
    if array.size == 0:
        array = np.zeros((rows if rows is not None else 0, 0))
    if array.ndim != 2:
        raise InvalidScenario("C must be an I×K matrix", shape=array.shape)
    if not np.all(np.isin(array, (-1.0, 0.0, 1.0))):
        raise InvalidScenario(
            "C entries must be -1 (competitor), 0 (neutral) or 1 (member)",
            invariant="c_jk in {-1, 0, 1}",
        )
    matrix = array.astype(np.int64)
    matrix.setflags(write=False)
    return matrix


def _positive(values: FloatArray, name: str) -> None:
    if np.any(values <= 0):
        raise InvalidScenario(f"{name} must be strictly positive", invariant=f"{name} > 0")


@dataclass(frozen=True, eq=False)
class Scenario:
    """A society seen through one overconfident agent's theory.

    Individuals and groups are 0-indexed; ``agent`` is the index of the
    overconfident individual, who is certain that their own caliber is
    ``a_tilde_i``.
    """

    C: IntArray
    A: FloatArray
    Theta: FloatArray
    v_q: FloatArray
    v_eta: FloatArray
    agent: int
    a_tilde_i: float
    group_labels: tuple[str, ...] | None = None

    @classmethod
    def create(
        cls,
        C: Any,
        A: Any,
        Theta: Any,
        v_q: Any,
        v_eta: Any,
        agent: int,
        a_tilde_i: float,
        group_labels: Any = None,
    ) -> Self:
        calibers = frozen(as_vector(A, "A"))
        individuals = calibers.shape[0]
        if individuals < 1:
            raise InvalidScenario("a society needs at least one individual")
        relationships = relationship_matrix(C, individuals)
        theta = frozen(as_vector(Theta, "Theta"))
        recognition_var = frozen(as_vector(v_q, "v_q"))
        discrimination_var = frozen(as_vector(v_eta, "v_eta"))
        groups = relationships.shape[1]

        if relationships.shape[0] != individuals:
            raise InvalidScenario("C must have one row per individual", I=individuals, rows=relationships.shape[0])
        if theta.shape[0] != groups or discrimination_var.shape[0] != groups:
            raise InvalidScenario(
                "Theta and v_eta must have one entry per group",
                K=groups,
                Theta=theta.shape[0],
                v_eta=discrimination_var.shape[0],
            )
        if recognition_var.shape[0] != individuals:
            raise InvalidScenario("v_q must have one entry per individual", I=individuals)
        _positive(recognition_var, "v_q")
        _positive(discrimination_var, "v_eta")
        if not 0 <= agent < individuals:
            raise InvalidScenario("agent index out of range", agent=agent, I=individuals)
        if not np.isfinite(a_tilde_i):
            raise InvalidScenario("a_tilde_i must be finite", invariant="finite overconfidence")
        labels = tuple(str(label) for label in group_labels) if group_labels is not None else None
        if labels is not None and len(labels) != groups:
            raise InvalidScenario("group_labels must name every group", K=groups, labels=len(labels))

        return cls(
            C=relationships,
            A=calibers,
            Theta=theta,
            v_q=recognition_var,
            v_eta=discrimination_var,
            agent=int(agent),
            a_tilde_i=float(a_tilde_i),
            group_labels=labels,
        )

    @property
    def I(self) -> int:  # noqa: E743
        return int(self.C.shape[0])

    @property
    def K(self) -> int:
        return int(self.C.shape[1])

    @property
    def delta(self) -> float:
        """Overconfidence ã_i − A_i."""
        return self.a_tilde_i - float(self.A[self.agent])

    @property
    def agent_row(self) -> IntArray:
        return self.C[self.agent]

    def with_agent(self, agent: int, a_tilde_i: float) -> "Scenario":
        """Same society seen by a different agent."""
        return Scenario.create(
            self.C, self.A, self.Theta, self.v_q, self.v_eta, agent, a_tilde_i, self.group_labels
        )

    def with_overconfidence(self, delta: float) -> "Scenario":
        return self.with_agent(self.agent, float(self.A[self.agent]) + delta)

    def replace(self, **changes: Any) -> "Scenario":
        """Re-validated copy with some fields changed."""
        fields = {
            "C": self.C,
            "A": self.A,
            "Theta": self.Theta,
            "v_q": self.v_q,
            "v_eta": self.v_eta,
            "agent": self.agent,
            "a_tilde_i": self.a_tilde_i,
            "group_labels": self.group_labels,
        }
        fields.update(changes)
        return Scenario.create(**fields)

    def same_society(self, other: "Scenario") -> bool:
        """True when only the agent and its overconfidence differ."""
        return (
            self.C.shape == other.C.shape
            and np.array_equal(self.C, other.C)
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.Theta, other.Theta)
            and np.array_equal(self.v_q, other.v_q)
            and np.array_equal(self.v_eta, other.v_eta)
        )

    def group_label(self, k: int) -> str:
        if self.group_labels is not None:
            return self.group_labels[k]
        return f"group {k + 1}"


@dataclass(frozen=True, eq=False)
class BiasReport:
    """The agent's long-run biases about discrimination, calibers and noise."""

    theta_bias: FloatArray
    caliber_bias: FloatArray
    sigma_bias: FloatArray
    classifications: tuple[Classification, ...]

    def total_discrimination_bias(self) -> float:
        """Σ_k |θ̃_k − Θ_k|."""
        return float(np.sum(np.abs(self.theta_bias)))

    def max_abs_difference(self, other: "BiasReport") -> float:
        return float(
            max(
                np.max(np.abs(self.theta_bias - other.theta_bias), initial=0.0),
                np.max(np.abs(self.caliber_bias - other.caliber_bias), initial=0.0),
                np.max(np.abs(self.sigma_bias - other.sigma_bias), initial=0.0),
            )
        )


@dataclass
class CorollaryCheck:
    """Outcome of one comparative-statics check.

    ``margin`` is the smallest slack of the checked inequalities (positive
    when they all hold); it is ``None`` when the check did not apply.
    """

    name: str
    applicable: bool
    passed: bool
    margin: float | None = None
    reason: str | None = None
    details: dict[str, Any] = field(default_factory=dict)


@dataclass
class CorollaryReport:
    """All comparative-statics checks evaluated on one scenario."""

    checks: list[CorollaryCheck]

    @property
    def passed(self) -> bool:
        """Every applicable check holds."""
        return all(check.passed for check in self.checks if check.applicable)

    def by_name(self, name: str) -> CorollaryCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)


@dataclass(frozen=True)
class GroupAgreement:
    """Whether two agents agree about the direction of discrimination toward a group."""

    group: int
    sign_first: int
    sign_second: int
    same_relationship: bool

    @property
    def agree(self) -> bool:
        return self.sign_first == self.sign_second


@dataclass(frozen=True)
class IndividualAgreement:
    """Two agents' beliefs about one individual's caliber."""

    individual: int
    belief_first: float
    belief_second: float
    agree: bool

    @property
    def difference(self) -> float:
        return self.belief_first - self.belief_second


@dataclass(frozen=True)
class AgreementReport:
    """Comparison of two agents' long-run beliefs about the same society."""

    first_agent: int
    second_agent: int
    groups: tuple[GroupAgreement, ...]
    individuals: tuple[IndividualAgreement, ...]

    @property
    def agree_on_all_groups(self) -> bool:
        return all(group.agree for group in self.groups)

    @property
    def agree_on_all_individuals(self) -> bool:
        return all(person.agree for person in self.individuals)
