"""Scenario file -> domain model transformers."""

from misbelief.transformers.scenario import DomainScenario, ScenarioTransformer

__all__ = ["DomainScenario", "ScenarioTransformer"]
