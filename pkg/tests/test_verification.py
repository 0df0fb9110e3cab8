"""Tests for the verification suites."""

import pytest

from misbelief.core.errors import InvalidModel
from misbelief.models.society import CorollaryCheck
from misbelief.services.verification import (
    CheckResult,
    Suite,
    SuiteReport,
    VerificationService,
)


def _raise() -> tuple[bool, float]:
    raise InvalidModel("Sigma is not positive definite", invariant="positive_definite")


class TestSuiteReport:
    """Tests for result aggregation."""

    def test_summary(self) -> None:
        """Counts and smallest margins per (suite, check), in first-seen order."""
        report = SuiteReport(
            results=[
                CheckResult("examples", "b", 0, True, 0.3),
                CheckResult("examples", "a", 0, True, 0.1),
                CheckResult("examples", "b", 1, False, -0.2),
            ]
        )
        assert list(report.summary()) == [("examples", "b"), ("examples", "a")]
        assert report.summary()[("examples", "b")] == (1, 2, -0.2)
        assert not report.passed
        assert [result.instance for result in report.failures] == [1]

    def test_library_error_fails_the_check(self) -> None:
        """An exception inside a check is a failure with the instance attached."""
        result = VerificationService._evaluate("prop2", "pipeline", 4, {"scenario": {"I": 1}}, _raise)
        assert not result.passed
        assert result.margin == -float("inf")
        assert result.details["scenario"] == {"I": 1}
        assert result.details["invariant"] == "positive_definite"

    def test_passing_checks_drop_details(self) -> None:
        """Only failures carry their scenario."""
        result = VerificationService._evaluate(
            "prop2", "pipeline", 0, {"scenario": {"I": 1}}, lambda: (True, 1.0)
        )
        assert result.passed
        assert result.details == {}

    @pytest.mark.parametrize(("margin", "expected"), [(5e-10, False), (1e-9, False), (2e-9, True)])
    def test_corollary_margin_floor(self, margin: float, expected: bool) -> None:
        """A comparative-statics check must clear the margin floor, not just be positive."""
        check = CorollaryCheck(name="in_group_superiority", applicable=True, passed=True, margin=margin)
        result = VerificationService._corollary_result(2, check, {"scenario": {"I": 3}})
        assert result.passed is expected
        assert result.margin == margin
        assert ("scenario" in result.details) is not expected

    def test_corollary_failure_stays_failed(self) -> None:
        """A check that failed in the society model fails whatever its margin."""
        check = CorollaryCheck(name="irrelevant_group", applicable=True, passed=False, margin=0.3)
        assert not VerificationService._corollary_result(0, check, {}).passed


class TestSuites:
    """Tests for running suites on a few instances."""

    @pytest.mark.parametrize("suite", [Suite.EXAMPLES, Suite.COROLLARIES, Suite.PROP2])
    def test_fast_suites_pass(self, suite: Suite) -> None:
        """Suites without the numeric oracle pass on a handful of instances."""
        report = VerificationService(instances=3, seed=0).run(suite)
        assert report.results
        assert report.passed, report.failures
        assert {result.suite for result in report.results} == {suite.value}

    def test_examples_reference_checks(self) -> None:
        """Reference values are checked once, random agreement per instance."""
        summary = VerificationService(instances=2, seed=1).run(Suite.EXAMPLES).summary()
        assert summary[("examples", "richer_observations_closed_form")][:2] == (1, 1)
        assert summary[("examples", "multi_attribute_pipeline")][:2] == (1, 1)
        assert summary[("examples", "richer_observations_random")][:2] == (2, 2)

    def test_reproducible(self) -> None:
        """Same seed, same summary."""
        first = VerificationService(instances=3, seed=9).run(Suite.PROP2).summary()
        second = VerificationService(instances=3, seed=9).run(Suite.PROP2).summary()
        assert first == second

    @pytest.mark.slow
    @pytest.mark.parametrize("suite", [Suite.THEOREM1, Suite.PROP1, Suite.PROP3])
    def test_oracle_suites_pass(self, suite: Suite) -> None:
        """Suites that call the numeric oracle pass on a few instances."""
        report = VerificationService(instances=2, seed=0).run(suite)
        assert report.passed, report.failures

    @pytest.mark.slow
    def test_all(self) -> None:
        """Every suite runs under ``all``."""
        report = VerificationService(instances=2, seed=3).run(Suite.ALL)
        suites = {result.suite for result in report.results}
        assert suites == {suite.value for suite in Suite if suite != Suite.ALL}
        assert report.passed, report.failures
