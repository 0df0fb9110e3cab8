"""Tests for error classification, settings and logging setup."""

import json

import pytest
import structlog

from misbelief.core.config import Settings
from misbelief.core.errors import (
    ErrorType,
    ExitCode,
    IllConditioned,
    InvalidGrid,
    InvalidModel,
    NonConvergence,
    ScenarioParseError,
    UnknownParameter,
    classify,
)
from misbelief.core.logging import configure_logging


class TestClassify:
    """Tests for mapping exceptions onto exit codes."""

    @pytest.mark.parametrize(
        ("error", "code"),
        [
            (ScenarioParseError("bad json"), ExitCode.PARSE_ERROR),
            (UnknownParameter("no such parameter"), ExitCode.PARSE_ERROR),
            (InvalidGrid("empty grid"), ExitCode.PARSE_ERROR),
            (InvalidModel("Sigma is not positive definite"), ExitCode.INVARIANT_VIOLATION),
            (IllConditioned("condition number too large"), ExitCode.INVARIANT_VIOLATION),
            (NonConvergence("no start converged"), ExitCode.NONCONVERGENCE),
        ],
    )
    def test_library_errors(self, error: Exception, code: ExitCode) -> None:
        """Library errors keep their own exit code."""
        assert classify(error).exit_code == code

    def test_foreign_exception(self) -> None:
        """Anything else is an internal error with exit code 3."""
        classified = classify(ZeroDivisionError("division by zero"))
        assert classified.error_type == ErrorType.INTERNAL_ERROR
        assert classified.exit_code == ExitCode.INVARIANT_VIOLATION
        assert classified.message == "ZeroDivisionError: division by zero"

    def test_log_dict_carries_details(self) -> None:
        """Details become structlog context."""
        classified = classify(InvalidModel("rank deficient", invariant="rank(M) = L", rank=1))
        assert classified.to_log_dict() == {
            "error_type": "invalid_model",
            "exit_code": 3,
            "message": "rank deficient",
            "invariant": "rank(M) = L",
            "rank": 1,
        }

    def test_subclass_keeps_parent_code(self) -> None:
        """An ill-conditioned model is still an invalid model."""
        assert isinstance(IllConditioned("x"), InvalidModel)
        assert classify(IllConditioned("x")).error_type == ErrorType.ILL_CONDITIONED


class TestSettings:
    """Tests for environment-driven settings."""

    def test_defaults(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Defaults hold when nothing is set."""
        monkeypatch.delenv("MISBELIEF_THREADS", raising=False)
        monkeypatch.delenv("MISBELIEF_LOG_LEVEL", raising=False)
        s = Settings(_env_file=None)
        assert s.threads == 0
        assert s.max_dim == 64
        assert s.oracle_starts == 5
        assert s.log_level == "WARNING"
        assert s.resolved_threads() >= 1

    def test_env_override(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """MISBELIEF_-prefixed variables override fields."""
        monkeypatch.setenv("MISBELIEF_THREADS", "3")
        monkeypatch.setenv("MISBELIEF_PD_TOL", "1e-8")
        monkeypatch.setenv("MISBELIEF_LOG_FORMAT", "json")
        s = Settings(_env_file=None)
        assert s.resolved_threads() == 3
        assert s.pd_tol == 1e-8
        assert s.log_format == "json"

    def test_rejects_invalid_values(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Field constraints are enforced."""
        monkeypatch.setenv("MISBELIEF_ORACLE_STARTS", "0")
        with pytest.raises(ValueError):
            Settings(_env_file=None)


class TestLogging:
    """Tests for structlog configuration."""

    def test_json_to_stderr(self, capsys: pytest.CaptureFixture[str]) -> None:
        """JSON lines go to stderr, nothing to stdout."""
        configure_logging(level="INFO", fmt="json")
        try:
            structlog.get_logger().info("Solved", case="III")
            captured = capsys.readouterr()
            assert captured.out == ""
            record = json.loads(captured.err.strip().splitlines()[-1])
            assert record["event"] == "Solved"
            assert record["case"] == "III"
            assert record["level"] == "info"
        finally:
            configure_logging()

    def test_level_filters(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Messages below the level are dropped."""
        configure_logging(level="ERROR", fmt="console")
        try:
            structlog.get_logger().warning("Ignored")
            assert capsys.readouterr().err == ""
        finally:
            configure_logging()
