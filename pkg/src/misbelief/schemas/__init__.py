"""Pydantic schemas for scenario files and reports."""

from misbelief.schemas.report import (
    CSV_HEADERS,
    Cell,
    Command,
    Provenance,
    ReportBundle,
    ReportTable,
)
from misbelief.schemas.scenario_file import (
    SCHEMA_VERSION,
    ContactSection,
    CorrelatedSection,
    Meta,
    MultiAttributeSection,
    RawSection,
    RicherObservationsSection,
    ScenarioFile,
    ScenarioKind,
    SocietySection,
)

__all__ = [
    "CSV_HEADERS",
    "Cell",
    "Command",
    "ContactSection",
    "CorrelatedSection",
    "Meta",
    "MultiAttributeSection",
    "Provenance",
    "RawSection",
    "ReportBundle",
    "ReportTable",
    "RicherObservationsSection",
    "SCHEMA_VERSION",
    "ScenarioFile",
    "ScenarioKind",
    "SocietySection",
]
