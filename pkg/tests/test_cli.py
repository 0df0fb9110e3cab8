"""Tests for the command-line interface and its exit codes."""

from pathlib import Path

import pytest
from typer.testing import CliRunner

from misbelief import __version__
from misbelief.cli import app, default_checkpoints


class TestVersion:
    """Tests for the version command."""

    def test_version(self, runner: CliRunner) -> None:
        """Prints the package version."""
        result = runner.invoke(app, ["version"])
        assert result.exit_code == 0
        assert result.stdout.strip() == f"misbelief v{__version__}"


class TestSolve:
    """Tests for ``misbelief solve``."""

    def test_success(self, runner: CliRunner, scenario_path) -> None:
        """A valid scenario prints its report and exits 0."""
        result = runner.invoke(app, ["solve", "--scenario", str(scenario_path("two_groups"))])
        assert result.exit_code == 0
        assert "command: solve" in result.stdout
        assert "out-group-derogation" in result.stdout

    def test_stdout_is_deterministic(self, runner: CliRunner, scenario_path) -> None:
        """Same input, same bytes on stdout."""
        args = ["solve", "--scenario", str(scenario_path("partitional"))]
        assert runner.invoke(app, args).stdout == runner.invoke(app, args).stdout

    def test_writes_csv(self, runner: CliRunner, scenario_path, tmp_path: Path) -> None:
        """--out writes the CSV report next to the printed one."""
        out = tmp_path / "solve.csv"
        result = runner.invoke(
            app, ["solve", "--scenario", str(scenario_path("example1")), "--out", str(out)]
        )
        assert result.exit_code == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == f"# tool_version: {__version__}"
        assert "section,item,quantity,value" in lines

    def test_full_precision(self, runner: CliRunner, scenario_path, tmp_path: Path) -> None:
        """Full precision keeps every digit of -1/7."""
        out = tmp_path / "solve.csv"
        runner.invoke(
            app,
            [
                "solve",
                "--scenario",
                str(scenario_path("example1")),
                "--out",
                str(out),
                "--full-precision",
            ],
        )
        assert repr(-1.0 / 7.0)[:12] in out.read_text(encoding="utf-8")

    @pytest.mark.parametrize(
        ("name", "code"),
        [("corrupted_syntax", 2), ("missing_version", 2), ("two_sections", 2), ("sigma_not_pd", 3)],
    )
    def test_exit_codes(self, runner: CliRunner, scenario_path, name: str, code: int) -> None:
        """Parse errors exit 2, invariant violations exit 3."""
        result = runner.invoke(app, ["solve", "--scenario", str(scenario_path(name))])
        assert result.exit_code == code
        assert "error:" in result.output

    def test_missing_file(self, runner: CliRunner, tmp_path: Path) -> None:
        """A path that does not exist is a parse error."""
        result = runner.invoke(app, ["solve", "--scenario", str(tmp_path / "absent.json")])
        assert result.exit_code == 2


class TestSweep:
    """Tests for ``misbelief sweep``."""

    def test_success(self, runner: CliRunner, scenario_path, tmp_path: Path) -> None:
        """A grid over v_eta yields one CSV row per grid value and quantity."""
        out = tmp_path / "sweep.csv"
        result = runner.invoke(
            app,
            [
                "sweep",
                "--scenario",
                str(scenario_path("two_groups")),
                "--param",
                "v_eta[1]",
                "--grid",
                "2,1,0.5",
                "--out",
                str(out),
            ],
        )
        assert result.exit_code == 0
        body = [line for line in out.read_text(encoding="utf-8").splitlines() if not line.startswith("#")]
        assert body[0] == "grid_value,quantity,value,trend"
        assert len(body) == 1 + 3 * 3

    @pytest.mark.parametrize(
        ("param", "grid"), [("v_eta[9]", "1,2"), ("v_q[1]", "1,-1"), ("v_q[1]", "1,x")]
    )
    def test_bad_arguments(self, runner: CliRunner, scenario_path, param: str, grid: str) -> None:
        """Unknown parameters and invalid grids exit 2."""
        result = runner.invoke(
            app,
            ["sweep", "--scenario", str(scenario_path("two_groups")), "--param", param, "--grid", grid],
        )
        assert result.exit_code == 2


class TestSimulate:
    """Tests for ``misbelief simulate``."""

    def test_default_checkpoints(self) -> None:
        """Powers of ten up to the step count."""
        assert default_checkpoints(10_000) == [100, 1000, 10_000]
        assert default_checkpoints(50) == [50]

    def test_seeded_trace(self, runner: CliRunner, scenario_path) -> None:
        """The seed option makes the trace reproducible."""
        args = [
            "simulate",
            "--scenario",
            str(scenario_path("raw_case1")),
            "--steps",
            "500",
            "--checkpoints",
            "50,500",
            "--seed",
            "3",
        ]
        first = runner.invoke(app, args)
        assert first.exit_code == 0
        assert "seed: 3" in first.stdout
        assert first.stdout == runner.invoke(app, args).stdout

    def test_checkpoint_beyond_steps(self, runner: CliRunner, scenario_path) -> None:
        """Checkpoints past --steps are an invariant violation."""
        result = runner.invoke(
            app,
            [
                "simulate",
                "--scenario",
                str(scenario_path("raw_case1")),
                "--steps",
                "100",
                "--checkpoints",
                "1000",
            ],
        )
        assert result.exit_code == 3


class TestVerify:
    """Tests for ``misbelief verify``."""

    def test_examples_suite(self, runner: CliRunner) -> None:
        """A passing suite exits 0 and prints one row per check."""
        result = runner.invoke(app, ["verify", "--suite", "examples", "--instances", "2"])
        assert result.exit_code == 0
        assert "multi_attribute_random" in result.stdout

    def test_unknown_suite(self, runner: CliRunner) -> None:
        """Suite names are validated by the CLI."""
        result = runner.invoke(app, ["verify", "--suite", "theorem9"])
        assert result.exit_code == 2


class TestGlobalOptions:
    """Tests for options on the root command."""

    def test_bad_log_level(self, runner: CliRunner) -> None:
        """An unknown log level is a usage error."""
        result = runner.invoke(app, ["--log-level", "LOUD", "version"])
        assert result.exit_code == 2

    def test_log_level_accepted(self, runner: CliRunner) -> None:
        """Known levels pass in any case."""
        result = runner.invoke(app, ["--log-level", "debug", "version"])
        assert result.exit_code == 0
