"""CLI entry point for misbelief."""

from collections.abc import Callable
from pathlib import Path
from typing import Any

import structlog
import typer

from misbelief import __version__
from misbelief.core.errors import ExitCode, classify
from misbelief.core.logging import configure_logging
from misbelief.schemas.report import ReportBundle
from misbelief.services.export import render_report, write_csv
from misbelief.services.reports import ReportService
from misbelief.services.verification import Suite, VerificationService
from misbelief.transformers.scenario import ScenarioTransformer

logger = structlog.get_logger()

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

app = typer.Typer(
    name="misbelief",
    help="Long-run beliefs of an overconfident Bayesian learner: solve, sweep, simulate, verify",
    no_args_is_help=True,
)

ScenarioOption = typer.Option(..., "--scenario", help="Scenario file (JSON)", dir_okay=False)
OutOption = typer.Option(None, "--out", help="Write the CSV report to this path", dir_okay=False)
FullPrecisionOption = typer.Option(
    False, "--full-precision", help="Print floats repr-exact instead of rounded"
)


def _csv_values(text: str, option: str, cast: Callable[[str], Any]) -> list[Any]:
    try:
        return [cast(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"{option} must be a comma-separated list: {e}") from e


def default_checkpoints(steps: int) -> list[int]:
    """Powers of ten from 100 below ``steps``, then ``steps`` itself."""
    points = []
    t = 100
    while t < steps:
        points.append(t)
        t *= 10
    return points + [steps]


def _emit(bundle: ReportBundle, out: Path | None, full_precision: bool) -> None:
    typer.echo(render_report(bundle, full_precision), nl=False)
    if out is not None:
        write_csv(bundle, out, full_precision)
        logger.info("CSV report written", path=str(out), rows=len(bundle.rows))


def _run(command: Callable[[], int]) -> None:
    """Run a command body and map failures onto the exit-code contract."""
    try:
        code = command()
    except typer.Exit:
        raise
    except Exception as e:
        classified = classify(e)
        logger.error("Command failed", **classified.to_log_dict())
        typer.echo(f"error: {classified.message}", err=True)
        raise typer.Exit(code=int(classified.exit_code)) from e
    raise typer.Exit(code=code)


@app.callback()
def configure(
    log_level: str | None = typer.Option(
        None, "--log-level", help="DEBUG, INFO, WARNING or ERROR (default: MISBELIEF_LOG_LEVEL)"
    ),
) -> None:
    """Logs go to stderr; reports go to stdout and --out."""
    if log_level is not None and log_level.upper() not in LOG_LEVELS:
        raise typer.BadParameter(f"--log-level must be one of {', '.join(LOG_LEVELS)}")
    configure_logging(level=log_level)


@app.command()
def solve(
    scenario: Path = ScenarioOption,
    out: Path | None = OutOption,
    full_precision: bool = FullPrecisionOption,
) -> None:
    """Compute the long-run biases of a scenario and cross-check them.

    Example:
        misbelief solve --scenario tests/fixtures/scenarios/two_groups.json
    """

    def body() -> int:
        document, digest = ScenarioTransformer.load(scenario)
        target = ScenarioTransformer.transform(document)
        _emit(ReportService(document, digest).solve(target), out, full_precision)
        return ExitCode.OK

    _run(body)


@app.command()
def sweep(
    scenario: Path = ScenarioOption,
    param: str = typer.Option(..., "--param", help="Parameter to vary, e.g. v_q[1] or a_tilde_i"),
    grid: str = typer.Option(..., "--grid", help="Comma-separated grid values"),
    out: Path | None = OutOption,
    full_precision: bool = FullPrecisionOption,
) -> None:
    """Re-solve a scenario along a one-parameter grid.

    Example:
        misbelief sweep --scenario two_groups.json --param "v_eta[1]" --grid 2,1,0.5
    """
    values = _csv_values(grid, "--grid", float)

    def body() -> int:
        document, digest = ScenarioTransformer.load(scenario)
        target = ScenarioTransformer.transform(document)
        _emit(ReportService(document, digest).sweep(target, param, values), out, full_precision)
        return ExitCode.OK

    _run(body)


@app.command()
def simulate(
    scenario: Path = ScenarioOption,
    steps: int = typer.Option(10_000, "--steps", min=1, help="Number of signals to draw"),
    checkpoints: str | None = typer.Option(
        None, "--checkpoints", help="Comma-separated observation counts (default: powers of ten)"
    ),
    seed: int | None = typer.Option(
        None, "--seed", min=0, max=2**64 - 1, help="Sample-path seed (default: the scenario's meta.seed)"
    ),
    out: Path | None = OutOption,
    full_precision: bool = FullPrecisionOption,
) -> None:
    """Learn from simulated signals and trace the distance to the long-run belief.

    Example:
        misbelief simulate --scenario two_groups.json --steps 100000 --seed 7 --out trace.csv
    """
    points = (
        _csv_values(checkpoints, "--checkpoints", int)
        if checkpoints is not None
        else default_checkpoints(steps)
    )

    def body() -> int:
        document, digest = ScenarioTransformer.load(scenario)
        target = ScenarioTransformer.transform(document)
        path_seed = seed if seed is not None else document.meta.seed
        bundle = ReportService(document, digest).simulate(target, steps, points, path_seed)
        _emit(bundle, out, full_precision)
        return ExitCode.OK

    _run(body)


@app.command()
def verify(
    suite: Suite = typer.Option(Suite.ALL, "--suite", help="Suite to run"),
    instances: int = typer.Option(
        100, "--instances", min=1, help="Random instances per randomized check"
    ),
    seed: int = typer.Option(0, "--seed", min=0, max=2**64 - 1, help="Seed of the instance streams"),
    out: Path | None = OutOption,
    full_precision: bool = FullPrecisionOption,
) -> None:
    """Run the cross-check suites; exits 1 if any check fails.

    Example:
        misbelief verify --suite theorem1 --instances 1000
    """

    def body() -> int:
        report = VerificationService(instances=instances, seed=seed).run(suite)
        bundle = ReportService(None, None).verify(report, suite.value, instances, seed)
        _emit(bundle, out, full_precision)
        return ExitCode.OK if report.passed else ExitCode.VERIFICATION_FAILED

    _run(body)


@app.command()
def version() -> None:
    """Show version information."""
    typer.echo(f"misbelief v{__version__}")


def main() -> None:
    """Main entry point."""
    app()


if __name__ == "__main__":
    main()
