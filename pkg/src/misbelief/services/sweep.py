"""One-parameter comparative statics.

A sweep re-solves a scenario at every grid value of one parameter and
reports, for every bias column, whether its magnitude moves monotonically
along the grid.
"""

import re
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import structlog

from misbelief.core.errors import InvalidGrid, UnknownParameter
from misbelief.models.extensions import (
    ContactScenario,
    CorrelatedScenario,
    RicherObservationsScenario,
)
from misbelief.models.society import Scenario
from misbelief.services.extensions import (
    contact_biases,
    correlated_biases,
    example1_biases,
    heterogeneous_contact_biases,
)
from misbelief.services.society import biases_closed_form

logger = structlog.get_logger()

SweepTarget = Scenario | CorrelatedScenario | ContactScenario | RicherObservationsScenario

INDEXED_PARAM = re.compile(r"^(v_q|v_eta)\[(\d+)\]$")
MONOTONE_TOL = 1e-12


class Trend(str, Enum):
    """Direction of a bias magnitude along the sweep grid."""

    INCREASING = "increasing"  # weakly, with at least one strict step
    DECREASING = "decreasing"
    CONSTANT = "constant"
    MIXED = "mixed"


@dataclass
class SweepResult:
    """Bias columns at every grid value, with their monotonicity."""

    param: str
    grid: list[float]
    columns: list[str]
    rows: list[list[float]]
    trends: dict[str, Trend] = field(default_factory=dict)


def trend_of(values: Sequence[float], tol: float = MONOTONE_TOL) -> Trend:
    """Monotonicity of |values| in sequence order."""
    magnitudes = np.abs(np.asarray(values, dtype=np.float64))
    steps = np.diff(magnitudes)
    scale = tol * max(1.0, float(np.max(magnitudes, initial=0.0)))
    rising = bool(np.any(steps > scale))
    falling = bool(np.any(steps < -scale))
    if rising and falling:
        return Trend.MIXED
    if rising:
        return Trend.INCREASING
    if falling:
        return Trend.DECREASING
    return Trend.CONSTANT


def _grid(values: Sequence[float], positive: bool) -> list[float]:
    grid = [float(v) for v in values]
    if not grid:
        raise InvalidGrid("sweep grid is empty")
    if not all(np.isfinite(grid)):
        raise InvalidGrid("sweep grid has non-finite values", grid=grid)
    if positive and any(v <= 0 for v in grid):
        raise InvalidGrid("grid values must be strictly positive for a variance", grid=grid)
    return grid


def _society_setter(s: Scenario, param: str) -> tuple[Callable[[float], Scenario], bool]:
    match = INDEXED_PARAM.match(param)
    if match:
        name, position = match.group(1), int(match.group(2)) - 1
        size = s.I if name == "v_q" else s.K
        if not 0 <= position < size:
            raise UnknownParameter(f"{param} is out of range", param=param, size=size)

        def set_variance(value: float) -> Scenario:
            values = np.array(getattr(s, name))
            values[position] = value
            return s.replace(**{name: values})

        return set_variance, True
    if param == "a_tilde_i":
        return (lambda value: s.replace(a_tilde_i=value)), False
    raise UnknownParameter(f"unknown society parameter {param}", param=param)


def _society_columns(s: Scenario) -> list[str]:
    return [f"theta_bias[{k + 1}]" for k in range(s.K)] + [f"caliber_bias[{j + 1}]" for j in range(s.I)]


def _society_row(s: Scenario) -> list[float]:
    report = biases_closed_form(s)
    return [float(v) for v in report.theta_bias] + [float(v) for v in report.caliber_bias]


def _contact_setter(ks: ContactScenario, param: str) -> tuple[Callable[[float], ContactScenario], bool]:
    if param == "v_a":
        return (
            lambda value: ContactScenario.create(
                ks.c, ks.v_q, value, ks.v_eta, ks.A, ks.Theta, ks.agent, ks.a_tilde_i
            )
        ), True
    if param == "a_tilde_i":
        return (
            lambda value: ContactScenario.create(
                ks.c, ks.v_q, ks.v_a, ks.v_eta, ks.A, ks.Theta, ks.agent, value
            )
        ), False
    if param == "I":
        return (lambda value: ks.resized(int(value))), True
    raise UnknownParameter(f"unknown contact parameter {param}", param=param)


def sweep(target: SweepTarget, param: str, values: Sequence[float]) -> SweepResult:
    """Re-solve ``target`` at each grid value of ``param``.

    Raises:
        UnknownParameter: If ``param`` does not exist for this scenario kind
        InvalidGrid: If the grid is empty or violates positivity
    """
    rows: list[list[float]]
    if isinstance(target, Scenario):
        setter, positive = _society_setter(target, param)
        grid = _grid(values, positive)
        columns = _society_columns(target)
        rows = [_society_row(setter(value)) for value in grid]

    elif isinstance(target, CorrelatedScenario):
        if param != "a_tilde_i":
            raise UnknownParameter(f"unknown correlated parameter {param}", param=param)
        grid = _grid(values, positive=False)
        columns = [f"caliber_bias[{j + 1}]" for j in range(target.I)]
        rows = []
        for value in grid:
            moved = CorrelatedScenario.create(target.Sigma_q, target.A, target.agent, value)
            rows.append([float(v) for v in correlated_biases(moved).caliber_bias])

    elif isinstance(target, ContactScenario):
        contact_setter, positive = _contact_setter(target, param)
        grid = _grid(values, positive)
        if param == "I" and any(value != int(value) or value <= target.agent for value in grid):
            raise InvalidGrid("I must be an integer larger than the agent index", grid=grid)
        shared = int(min(grid)) if param == "I" else target.I
        columns = ["theta_bias"] + [f"caliber_bias[{j + 1}]" for j in range(shared)]
        rows = []
        for value in grid:
            scenario = contact_setter(value)
            solved = (
                contact_biases(scenario)
                if scenario.homogeneous
                else heterogeneous_contact_biases(scenario)
            )
            rows.append([solved.theta_bias] + [float(v) for v in solved.caliber_bias[:shared]])

    else:
        if param not in ("v_q_o", "v_a_o"):
            raise UnknownParameter(f"unknown richer-observations parameter {param}", param=param)
        grid = _grid(values, positive=True)
        columns = ["ratio_a3", "ratio_a4", "ratio_theta"]
        rows = []
        for value in grid:
            v_q_o = value if param == "v_q_o" else target.v_q_o
            v_a_o = value if param == "v_a_o" else target.v_a_o
            ratios = example1_biases(v_q_o, v_a_o, target.Delta)
            rows.append([ratios.ratio_a3, ratios.ratio_a4, ratios.ratio_theta])

    trends = {column: trend_of([row[c] for row in rows]) for c, column in enumerate(columns)}
    logger.debug("Sweep finished", param=param, points=len(grid), columns=len(columns))
    return SweepResult(param=param, grid=grid, columns=columns, rows=rows, trends=trends)
