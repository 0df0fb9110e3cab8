"""Pydantic schemas for command reports.

A ReportBundle holds a machine-readable long-format table (written as CSV)
and the human tables printed to stdout. Provenance carries no timestamps:
a report is a pure function of the input file, the flags and the seed.
"""

from enum import Enum

from pydantic import BaseModel, Field

Cell = str | int | float | bool


class Command(str, Enum):
    """CLI commands that produce reports."""

    SOLVE = "solve"
    SWEEP = "sweep"
    SIMULATE = "simulate"
    VERIFY = "verify"


# Fixed CSV header per command; simulate appends one column per fundamental.
CSV_HEADERS: dict[Command, list[str]] = {
    Command.SOLVE: ["section", "item", "quantity", "value"],
    Command.SWEEP: ["grid_value", "quantity", "value", "trend"],
    Command.SIMULATE: ["t", "distance"],
    Command.VERIFY: ["suite", "check", "passed", "total", "min_margin"],
}


class Provenance(BaseModel):
    """Where a report's numbers came from."""

    tool_version: str = Field(description="misbelief version that produced the report")
    command: Command = Field(description="Command that produced the report")
    input_digest: str | None = Field(
        default=None, description="SHA-256 of the scenario file bytes (none for verify)"
    )
    scenario_name: str | None = Field(default=None, description="meta.name of the scenario")
    scenario_kind: str | None = Field(default=None, description="Scenario-kind section")
    seed: int = Field(description="Seed used for sampling, or the scenario's default seed")
    parameters: dict[str, str] = Field(
        default_factory=dict, description="Command flags that shape the output"
    )


class ReportTable(BaseModel):
    """A human-readable table."""

    title: str = Field(description="Table heading")
    columns: list[str] = Field(description="Column names")
    rows: list[list[Cell]] = Field(default_factory=list, description="Table rows")


class ReportBundle(BaseModel):
    """Everything one command reports."""

    provenance: Provenance
    header: list[str] = Field(description="CSV header row")
    rows: list[list[Cell]] = Field(default_factory=list, description="CSV data rows")
    tables: list[ReportTable] = Field(default_factory=list, description="Human tables")
    notes: list[str] = Field(
        default_factory=list, description="Free-text lines, e.g. serialized failing scenarios"
    )
