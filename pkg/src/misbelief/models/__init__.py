"""Immutable domain types."""

from misbelief.models.belief import (
    Case,
    CovarianceMode,
    DogmaticConstraint,
    LimitBelief,
    PinMode,
    RawScenario,
)
from misbelief.models.extensions import (
    ContactBiases,
    ContactScenario,
    CorrelatedBiases,
    CorrelatedScenario,
    GroupTag,
    MultiAttributeBiases,
    MultiAttributeScenario,
    RicherObservations,
    RicherObservationsScenario,
)
from misbelief.models.gaussian import (
    FundamentalsRole,
    FundamentalsVector,
    LinearGaussianModel,
    SignalBatch,
)
from misbelief.models.simulation import ConvergenceTrace, PosteriorState, TracePoint
from misbelief.models.society import (
    AgreementReport,
    BiasReport,
    Classification,
    CorollaryCheck,
    CorollaryReport,
    GroupAgreement,
    IndividualAgreement,
    Scenario,
)

__all__ = [
    "AgreementReport",
    "BiasReport",
    "Case",
    "Classification",
    "ContactBiases",
    "ContactScenario",
    "ConvergenceTrace",
    "CorollaryCheck",
    "CorollaryReport",
    "CorrelatedBiases",
    "CorrelatedScenario",
    "CovarianceMode",
    "DogmaticConstraint",
    "FundamentalsRole",
    "FundamentalsVector",
    "GroupAgreement",
    "GroupTag",
    "IndividualAgreement",
    "LimitBelief",
    "LinearGaussianModel",
    "MultiAttributeBiases",
    "MultiAttributeScenario",
    "PinMode",
    "PosteriorState",
    "RawScenario",
    "RicherObservations",
    "RicherObservationsScenario",
    "Scenario",
    "SignalBatch",
    "TracePoint",
]
