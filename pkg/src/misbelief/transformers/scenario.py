"""Scenario file transformer.

Loads and validates scenario documents and converts each section into the
core domain type, moving 1-based file indices to 0-based core indices.
"""

import hashlib
from pathlib import Path

from pydantic import ValidationError

from misbelief.core.errors import ScenarioParseError
from misbelief.models.belief import DogmaticConstraint, RawScenario
from misbelief.models.extensions import (
    ContactScenario,
    CorrelatedScenario,
    MultiAttributeScenario,
    RicherObservationsScenario,
)
from misbelief.models.gaussian import FundamentalsVector, LinearGaussianModel
from misbelief.models.society import Scenario
from misbelief.schemas.scenario_file import (
    ContactSection,
    CorrelatedSection,
    MultiAttributeSection,
    RawSection,
    RicherObservationsSection,
    ScenarioFile,
    ScenarioKind,
    SocietySection,
)

DomainScenario = (
    Scenario
    | CorrelatedScenario
    | ContactScenario
    | RawScenario
    | RicherObservationsScenario
    | MultiAttributeScenario
)


class ScenarioTransformer:
    """Scenario file -> core domain objects."""

    @staticmethod
    def load(path: Path) -> tuple[ScenarioFile, str]:
        """Read and validate a scenario file.

        Returns:
            The validated document and the SHA-256 digest of its bytes

        Raises:
            ScenarioParseError: If the file cannot be read, is not JSON, or
                does not match the schema. The message lists every failing
                field path; JSON syntax errors carry their line and column.
        """
        try:
            raw = path.read_bytes()
        except OSError as e:
            raise ScenarioParseError(f"cannot read {path}: {e.strerror}", path=str(path)) from e

        try:
            document = ScenarioFile.model_validate_json(raw)
        except ValidationError as e:
            problems = [
                f"{'.'.join(str(part) for part in error['loc']) or '<root>'}: {error['msg']}"
                for error in e.errors()
            ]
            raise ScenarioParseError(
                f"invalid scenario file {path}: " + "; ".join(problems),
                path=str(path),
                errors=problems,
            ) from e
        return document, hashlib.sha256(raw).hexdigest()

    @staticmethod
    def to_society(section: SocietySection) -> Scenario:
        return Scenario.create(
            C=section.C,
            A=section.A,
            Theta=section.Theta,
            v_q=section.v_q,
            v_eta=section.v_eta,
            agent=section.agent - 1,
            a_tilde_i=section.a_tilde_i,
            group_labels=section.group_labels,
        )

    @staticmethod
    def to_correlated(section: CorrelatedSection) -> CorrelatedScenario:
        return CorrelatedScenario.create(
            section.Sigma_q, section.A, section.agent - 1, section.a_tilde_i
        )

    @staticmethod
    def to_contact(section: ContactSection) -> ContactScenario:
        return ContactScenario.create(
            c=section.c,
            v_q=section.v_q,
            v_a=section.v_a,
            v_eta=section.v_eta,
            A=section.A,
            Theta=section.Theta,
            agent=section.agent - 1,
            a_tilde_i=section.a_tilde_i,
        )

    @staticmethod
    def to_raw(section: RawSection) -> RawScenario:
        model = LinearGaussianModel.create(section.M, section.Sigma)
        spec = section.constraint
        constraint: DogmaticConstraint
        if spec.case == "II":
            constraint = DogmaticConstraint.case2(spec.pinned_vector)
        else:
            # Presence of these fields per case is enforced by the schema.
            assert spec.pinned_index is not None and spec.pinned_value is not None
            if spec.case == "I":
                constraint = DogmaticConstraint.case1(
                    spec.pinned_index - 1, spec.pinned_value, spec.sigma_tilde
                )
            else:
                constraint = DogmaticConstraint.case3(spec.pinned_index - 1, spec.pinned_value)
        return RawScenario(
            model=model, true_f=FundamentalsVector.create(section.f), constraint=constraint
        )

    @staticmethod
    def to_richer_observations(section: RicherObservationsSection) -> RicherObservationsScenario:
        return RicherObservationsScenario(
            v_q_o=section.v_q_o, v_a_o=section.v_a_o, Delta=section.Delta
        )

    @staticmethod
    def to_multi_attribute(section: MultiAttributeSection) -> MultiAttributeScenario:
        return MultiAttributeScenario(
            a2=section.a2,
            m1=section.m1,
            m2=section.m2,
            theta1=section.theta1,
            v_q1=section.v_q1,
            v_eta1=section.v_eta1,
            Delta1=section.Delta1,
            a1=section.a1,
        )

    @classmethod
    def transform(cls, document: ScenarioFile) -> DomainScenario:
        """Convert the document's single section to its domain type.

        Raises:
            InvalidModel / InvalidScenario / InvalidConstraint: If the values
                violate a core invariant (exit code 3, not a parse error)
        """
        match document.kind:
            case ScenarioKind.SOCIETY:
                assert document.society is not None
                return cls.to_society(document.society)
            case ScenarioKind.CORRELATED:
                assert document.correlated is not None
                return cls.to_correlated(document.correlated)
            case ScenarioKind.CONTACT:
                assert document.contact is not None
                return cls.to_contact(document.contact)
            case ScenarioKind.RAW:
                assert document.raw is not None
                return cls.to_raw(document.raw)
            case ScenarioKind.RICHER_OBSERVATIONS:
                assert document.richer_observations is not None
                return cls.to_richer_observations(document.richer_observations)
            case ScenarioKind.MULTI_ATTRIBUTE:
                assert document.multi_attribute is not None
                return cls.to_multi_attribute(document.multi_attribute)
