"""Shared test fixtures."""

import os
from pathlib import Path

# Single-threaded and quiet unless a test asks otherwise. Must be set before
# any misbelief import so the global Settings pick it up.
os.environ.setdefault("MISBELIEF_THREADS", "1")
os.environ.setdefault("MISBELIEF_LOG_LEVEL", "WARNING")

import numpy as np
import pytest
from typer.testing import CliRunner

from misbelief.models.belief import DogmaticConstraint, RawScenario
from misbelief.models.gaussian import FundamentalsVector, LinearGaussianModel
from misbelief.models.society import Scenario

SCENARIOS = Path(__file__).parent / "fixtures" / "scenarios"


@pytest.fixture
def scenario_path():
    """Resolve a scenario fixture by stem, e.g. ``scenario_path("two_groups")``."""

    def resolve(name: str) -> Path:
        return SCENARIOS / f"{name}.json"

    return resolve


@pytest.fixture
def runner() -> CliRunner:
    """CLI runner; logs go to stderr so stdout holds only the report."""
    return CliRunner()


@pytest.fixture
def two_groups() -> Scenario:
    """Two individuals in competing groups, unit variances, agent overconfident by 1."""
    return Scenario.create(
        C=[[1], [-1]],
        A=[0.0, 0.0],
        Theta=[0.0],
        v_q=[1.0, 1.0],
        v_eta=[1.0],
        agent=0,
        a_tilde_i=1.0,
    )


@pytest.fixture
def partitional() -> Scenario:
    """Three groups: two rival pairs and one bystander, agent in the first pair."""
    return Scenario.create(
        C=[[1, -1, 0], [1, -1, 0], [-1, 1, 0], [-1, 1, 0], [0, 0, 1]],
        A=np.zeros(5),
        Theta=np.zeros(3),
        v_q=np.ones(5),
        v_eta=[1.0, 2.0, 0.5],
        agent=0,
        a_tilde_i=1.0,
    )


@pytest.fixture
def small_model() -> LinearGaussianModel:
    """D=3, L=2 model with mildly correlated errors."""
    return LinearGaussianModel.create(
        [[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        [[1.0, 0.2, 0.0], [0.2, 1.0, 0.1], [0.0, 0.1, 1.0]],
    )


@pytest.fixture
def small_raw(small_model: LinearGaussianModel) -> RawScenario:
    """Case III on ``small_model``: f = (0, 1), first fundamental pinned at 1."""
    return RawScenario(
        model=small_model,
        true_f=FundamentalsVector.create([0.0, 1.0]),
        constraint=DogmaticConstraint.case3(0, 1.0),
    )
