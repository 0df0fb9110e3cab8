"""Pydantic schema for scenario files.

A scenario file is a JSON document with a mandatory ``schema_version``, a
``meta`` block and exactly one scenario-kind section. Matrices are nested
arrays in row-major order. Individual and fundamental indices are 1-based
here; the transformer layer converts them to the 0-based core indices.
"""

from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

SCHEMA_VERSION = 1


class ScenarioKind(str, Enum):
    """Scenario-kind section names."""

    SOCIETY = "society"
    CORRELATED = "correlated"
    CONTACT = "contact"
    RAW = "raw"
    RICHER_OBSERVATIONS = "richer_observations"
    MULTI_ATTRIBUTE = "multi_attribute"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Meta(_Section):
    """Scenario name and the default seed for commands that draw samples."""

    name: str = Field(description="Scenario name echoed into reports")
    seed: int = Field(
        default=0, ge=0, le=2**64 - 1, description="Default seed for simulate and verify"
    )


class SocietySection(_Section):
    """Groups, individuals and the agent's overconfidence."""

    I: int = Field(ge=1, description="Number of individuals")  # noqa: E741
    K: int = Field(ge=0, description="Number of groups")
    C: list[list[int]] = Field(description="I×K relationship matrix, entries in {-1, 0, 1}")
    A: list[float] = Field(description="True calibers, length I")
    Theta: list[float] = Field(description="True discrimination levels, length K")
    v_q: list[float] = Field(description="Recognition-error variances, length I")
    v_eta: list[float] = Field(description="Discrimination-signal variances, length K")
    agent: int = Field(ge=1, description="The agent's individual index (1-based)")
    a_tilde_i: float = Field(description="The agent's dogmatic belief about their own caliber")
    group_labels: list[str] | None = Field(
        default=None, description="Optional group names, echoed into reports only"
    )

    @model_validator(mode="after")
    def _check_dimensions(self) -> "SocietySection":
        if len(self.C) != self.I or any(len(row) != self.K for row in self.C):
            raise ValueError(f"C must be {self.I}×{self.K}")
        for name, values, size in (
            ("A", self.A, self.I),
            ("v_q", self.v_q, self.I),
            ("Theta", self.Theta, self.K),
            ("v_eta", self.v_eta, self.K),
        ):
            if len(values) != size:
                raise ValueError(f"{name} must have length {size}, got {len(values)}")
        if self.group_labels is not None and len(self.group_labels) != self.K:
            raise ValueError(f"group_labels must have length {self.K}")
        if self.agent > self.I:
            raise ValueError(f"agent must be between 1 and I={self.I}")
        return self


class CorrelatedSection(_Section):
    """No groups; recognition errors with a full covariance matrix."""

    Sigma_q: list[list[float]] = Field(description="I×I recognition-error covariance")
    A: list[float] = Field(description="True calibers, length I")
    agent: int = Field(ge=1, description="The agent's individual index (1-based)")
    a_tilde_i: float = Field(description="The agent's dogmatic belief about their own caliber")

    @model_validator(mode="after")
    def _check_dimensions(self) -> "CorrelatedSection":
        size = len(self.A)
        if len(self.Sigma_q) != size or any(len(row) != size for row in self.Sigma_q):
            raise ValueError(f"Sigma_q must be {size}×{size} to match A")
        if self.agent > size:
            raise ValueError(f"agent must be between 1 and I={size}")
        return self


class ContactSection(_Section):
    """One group plus direct caliber signals about every individual."""

    c: list[int] = Field(description="Membership (1) or competition (-1) per individual")
    v_q: float | list[float] = Field(description="Recognition-error variance(s)")
    v_a: float | list[float] = Field(description="Direct caliber-signal variance(s)")
    v_eta: float = Field(gt=0, description="Discrimination-signal variance")
    A: list[float] = Field(description="True calibers, length I")
    Theta: float = Field(description="True discrimination level of the group")
    agent: int = Field(ge=1, description="The agent's individual index (1-based)")
    a_tilde_i: float = Field(description="The agent's dogmatic belief about their own caliber")

    @model_validator(mode="after")
    def _check_dimensions(self) -> "ContactSection":
        size = len(self.c)
        if len(self.A) != size:
            raise ValueError(f"A must have length {size} to match c")
        for name in ("v_q", "v_a"):
            value = getattr(self, name)
            if isinstance(value, list) and len(value) != size:
                raise ValueError(f"{name} must be a scalar or have length {size}")
        if self.agent > size:
            raise ValueError(f"agent must be between 1 and I={size}")
        return self


class ConstraintSection(_Section):
    """The agent's dogmatic constraint on a raw model."""

    case: Literal["I", "II", "III"] = Field(description="Which inference problem")
    pinned_index: int | None = Field(default=None, ge=1, description="Pinned fundamental (1-based)")
    pinned_value: float | None = Field(default=None, description="Value it is pinned to")
    pinned_vector: list[float] | None = Field(default=None, description="Case II pinned vector")
    sigma_tilde: list[list[float]] | None = Field(
        default=None, description="Case I fixed covariance belief"
    )

    @model_validator(mode="after")
    def _check_case(self) -> "ConstraintSection":
        if self.case == "II":
            if self.pinned_vector is None:
                raise ValueError("Case II needs pinned_vector")
            if self.pinned_index is not None or self.sigma_tilde is not None:
                raise ValueError("Case II takes only pinned_vector")
            return self
        if self.pinned_index is None or self.pinned_value is None:
            raise ValueError(f"Case {self.case} needs pinned_index and pinned_value")
        if self.pinned_vector is not None:
            raise ValueError(f"Case {self.case} does not take pinned_vector")
        if (self.case == "I") != (self.sigma_tilde is not None):
            raise ValueError("sigma_tilde is required for Case I and not allowed otherwise")
        return self


class RawSection(_Section):
    """A general linear-Gaussian model with an explicit constraint."""

    M: list[list[float]] = Field(description="D×L design matrix")
    Sigma: list[list[float]] = Field(description="D×D signal covariance")
    f: list[float] = Field(description="True fundamentals, length L")
    constraint: ConstraintSection


class RicherObservationsSection(_Section):
    """Two groups of two; the agent also sees direct caliber signals."""

    v_q_o: float = Field(gt=0, description="Out-group recognition-error variance")
    v_a_o: float = Field(gt=0, description="Out-group direct caliber-signal variance")
    Delta: float = Field(default=1.0, description="The agent's overconfidence")


class MultiAttributeSection(_Section):
    """Recognition driven by talent and morality."""

    a2: float = Field(default=0.0, description="Out-group member's talent")
    m1: float = Field(default=0.0, description="Agent's morality")
    m2: float = Field(default=0.0, description="Out-group member's morality")
    theta1: float = Field(default=0.0, description="Discrimination level")
    a1: float = Field(default=0.0, description="Agent's talent")
    v_q1: float = Field(gt=0, description="Agent's recognition-error variance")
    v_eta1: float = Field(gt=0, description="Discrimination-signal variance")
    Delta1: float = Field(description="Overconfidence about the agent's talent plus morality")


class ScenarioFile(_Section):
    """A versioned scenario document."""

    schema_version: Literal[1] = Field(description="Scenario file format version")
    meta: Meta
    society: SocietySection | None = None
    correlated: CorrelatedSection | None = None
    contact: ContactSection | None = None
    raw: RawSection | None = None
    richer_observations: RicherObservationsSection | None = None
    multi_attribute: MultiAttributeSection | None = None

    @model_validator(mode="after")
    def _exactly_one_section(self) -> "ScenarioFile":
        present = [kind.value for kind in ScenarioKind if getattr(self, kind.value) is not None]
        if len(present) != 1:
            raise ValueError(
                f"exactly one scenario section is required, found {present or 'none'}"
            )
        return self

    @property
    def kind(self) -> ScenarioKind:
        return next(kind for kind in ScenarioKind if getattr(self, kind.value) is not None)
