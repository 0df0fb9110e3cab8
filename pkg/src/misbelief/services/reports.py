"""Report assembly for the CLI commands.

Each ``ReportService`` method runs the matching computation on a domain
scenario and lays the numbers out as a ReportBundle: long-format CSV rows
plus the human tables.
"""

import json
from collections.abc import Sequence

import numpy as np
import structlog

from misbelief import __version__
from misbelief.core.errors import UnknownParameter
from misbelief.core.linalg import FloatArray
from misbelief.models.belief import DogmaticConstraint, RawScenario
from misbelief.models.extensions import (
    ContactScenario,
    CorrelatedScenario,
    MultiAttributeScenario,
    RicherObservationsScenario,
)
from misbelief.models.gaussian import FundamentalsVector, LinearGaussianModel
from misbelief.models.society import Scenario
from misbelief.schemas.report import (
    CSV_HEADERS,
    Cell,
    Command,
    Provenance,
    ReportBundle,
    ReportTable,
)
from misbelief.schemas.scenario_file import ScenarioFile
from misbelief.services import extensions, society
from misbelief.services.limit_solver import kl_at, solve
from misbelief.services.simulate import convergence_trace
from misbelief.services.sweep import sweep
from misbelief.services.verification import SuiteReport
from misbelief.transformers.scenario import DomainScenario

logger = structlog.get_logger()

ModelTriple = tuple[LinearGaussianModel, FundamentalsVector, DogmaticConstraint]


def model_triple(target: DomainScenario) -> ModelTriple:
    """The linear-Gaussian model, true fundamentals and constraint behind any scenario kind."""
    if isinstance(target, Scenario):
        return society.build_model(target)
    if isinstance(target, CorrelatedScenario):
        return extensions.correlated_model(target)
    if isinstance(target, ContactScenario):
        return extensions.contact_model(target)
    if isinstance(target, RicherObservationsScenario):
        return extensions.richer_observations_model(target.v_q_o, target.v_a_o, target.Delta)
    if isinstance(target, MultiAttributeScenario):
        return extensions.multi_attribute_model(target)
    return target.model, target.true_f, target.constraint


def fundamental_labels(target: DomainScenario, L: int) -> list[str]:
    """Human names of the fundamentals in model order."""
    if isinstance(target, Scenario):
        return [f"A_{j + 1}" for j in range(target.I)] + [
            f"Theta_{k + 1}" for k in range(target.K)
        ]
    if isinstance(target, CorrelatedScenario):
        return [f"A_{j + 1}" for j in range(target.I)]
    if isinstance(target, ContactScenario):
        return [f"A_{j + 1}" for j in range(target.I)] + ["Theta"]
    if isinstance(target, RicherObservationsScenario):
        return ["A_1", "A_2", "A_3", "A_4", "Theta"]
    if isinstance(target, MultiAttributeScenario):
        return ["A_1+m_1", "A_2+m_2", "Theta_1", "A_2"]
    return [f"f_{j + 1}" for j in range(L)]


class ReportService:
    """Builds the report bundle of each command for one scenario file."""

    def __init__(self, document: ScenarioFile | None, input_digest: str | None) -> None:
        """Initialize report service.

        Args:
            document: Validated scenario file (None for verify)
            input_digest: SHA-256 of the scenario file bytes
        """
        self.document = document
        self.input_digest = input_digest
        self.logger = logger.bind(service="reports")

    def _provenance(
        self, command: Command, seed: int | None = None, **parameters: str
    ) -> Provenance:
        document = self.document
        return Provenance(
            tool_version=__version__,
            command=command,
            input_digest=self.input_digest,
            scenario_name=document.meta.name if document else None,
            scenario_kind=document.kind.value if document else None,
            seed=seed if seed is not None else (document.meta.seed if document else 0),
            parameters=parameters,
        )

    # -- solve ---------------------------------------------------------------

    def solve(self, target: DomainScenario) -> ReportBundle:
        """Closed-form biases cross-checked against the generic solver."""
        self.logger.info("Solving scenario", kind=type(target).__name__)
        rows: list[list[Cell]] = []
        tables: list[ReportTable] = []
        if isinstance(target, Scenario):
            self._solve_society(target, rows, tables)
        elif isinstance(target, CorrelatedScenario):
            self._solve_correlated(target, rows, tables)
        elif isinstance(target, ContactScenario):
            self._solve_contact(target, rows, tables)
        elif isinstance(target, RicherObservationsScenario):
            self._solve_richer_observations(target, rows, tables)
        elif isinstance(target, MultiAttributeScenario):
            self._solve_multi_attribute(target, rows, tables)
        else:
            self._solve_raw(target, rows, tables)
        return ReportBundle(
            provenance=self._provenance(Command.SOLVE),
            header=CSV_HEADERS[Command.SOLVE],
            rows=rows,
            tables=tables,
        )

    @staticmethod
    def _solve_society(s: Scenario, rows: list[list[Cell]], tables: list[ReportTable]) -> None:
        report = society.biases_closed_form(s)
        difference = report.max_abs_difference(society.biases_via_theorem(s))

        group_rows: list[list[Cell]] = []
        for k in range(s.K):
            label = s.group_label(k)
            value = float(report.theta_bias[k])
            rows.append(["group", label, "theta_bias", value])
            group_rows.append([label, int(s.agent_row[k]), value])

        individual_rows: list[list[Cell]] = []
        for j in range(s.I):
            value = float(report.caliber_bias[j])
            tag = "agent" if j == s.agent else report.classifications[j].value
            rows.append(["individual", str(j + 1), "caliber_bias", value])
            rows.append(["individual", str(j + 1), "classification", tag])
            individual_rows.append([j + 1, value, tag])

        total = report.total_discrimination_bias()
        rows.append(["summary", "agent", "delta", s.delta])
        rows.append(["summary", "all groups", "total_discrimination_bias", total])
        rows.append(["summary", "pipeline", "max_abs_difference", difference])

        corollary_rows: list[list[Cell]] = []
        for check in society.corollary_checks(s).checks:
            if check.applicable:
                assert check.margin is not None
                rows.append(["corollary", check.name, "passed", check.passed])
                rows.append(["corollary", check.name, "margin", check.margin])
                corollary_rows.append([check.name, "yes", check.passed, check.margin])
            else:
                rows.append(["corollary", check.name, "not_applicable", check.reason or ""])
                corollary_rows.append([check.name, "no", "-", check.reason or ""])

        tables += [
            ReportTable(
                title="Biases about discrimination",
                columns=["group", "agent_relationship", "theta_bias"],
                rows=group_rows,
            ),
            ReportTable(
                title="Biases about individuals",
                columns=["individual", "caliber_bias", "classification"],
                rows=individual_rows,
            ),
            ReportTable(
                title="Summary",
                columns=["delta", "total_discrimination_bias", "pipeline_max_abs_difference"],
                rows=[[s.delta, total, difference]],
            ),
            ReportTable(
                title="Comparative statics",
                columns=["check", "applicable", "passed", "margin"],
                rows=corollary_rows,
            ),
        ]

    @staticmethod
    def _solve_correlated(
        cs: CorrelatedScenario, rows: list[list[Cell]], tables: list[ReportTable]
    ) -> None:
        closed = extensions.correlated_biases(cs)
        pipeline = extensions.correlated_via_theorem(cs)
        difference = float(np.max(np.abs(closed.caliber_bias - pipeline.caliber_bias)))
        individual_rows: list[list[Cell]] = []
        for j in range(cs.I):
            value = float(closed.caliber_bias[j])
            tag = "agent" if j == cs.agent else closed.group_tags[j].value
            rows.append(["individual", str(j + 1), "caliber_bias", value])
            rows.append(["individual", str(j + 1), "tag", tag])
            individual_rows.append([j + 1, value, tag])
        sigma_rows: list[list[Cell]] = []
        for j in range(cs.I):
            for k in range(cs.I):
                rows.append(["sigma_bias", f"{j + 1}:{k + 1}", "sigma_bias", float(closed.sigma_bias[j, k])])
            sigma_rows.append([j + 1, *(float(v) for v in closed.sigma_bias[j])])
        gap = extensions.relative_covariance_gap(cs)
        rows.append(["summary", "pipeline", "max_abs_difference", difference])
        rows.append(["summary", "covariance", "relative_covariance_gap", gap])
        tables += [
            ReportTable(
                title="Biases about individuals",
                columns=["individual", "caliber_bias", "tag"],
                rows=individual_rows,
            ),
            ReportTable(
                title="Covariance bias",
                columns=["row", *(str(k + 1) for k in range(cs.I))],
                rows=sigma_rows,
            ),
            ReportTable(
                title="Summary",
                columns=["pipeline_max_abs_difference", "relative_covariance_gap"],
                rows=[[difference, gap]],
            ),
        ]

    @staticmethod
    def _solve_contact(
        ks: ContactScenario, rows: list[list[Cell]], tables: list[ReportTable]
    ) -> None:
        if ks.homogeneous:
            biases = extensions.contact_biases(ks)
            pipeline = extensions.contact_via_theorem(ks)
            difference: Cell = float(
                max(
                    abs(biases.theta_bias - pipeline.theta_bias),
                    np.max(np.abs(biases.caliber_bias - pipeline.caliber_bias)),
                )
            )
            method = "closed_form"
        else:
            biases = extensions.heterogeneous_contact_biases(ks)
            difference = "-"
            method = "numeric_oracle"
        rows.append(["group", "group 1", "theta_bias", biases.theta_bias])
        individual_rows: list[list[Cell]] = []
        for j in range(ks.I):
            value = float(biases.caliber_bias[j])
            rows.append(["individual", str(j + 1), "caliber_bias", value])
            individual_rows.append([j + 1, int(ks.c[j]), value])
        rows.append(["summary", "method", method, difference])
        tables += [
            ReportTable(
                title="Bias about discrimination",
                columns=["theta_bias", "method", "pipeline_max_abs_difference"],
                rows=[[biases.theta_bias, method, difference]],
            ),
            ReportTable(
                title="Biases about individuals",
                columns=["individual", "c", "caliber_bias"],
                rows=individual_rows,
            ),
        ]

    @staticmethod
    def _solve_richer_observations(
        ro: RicherObservationsScenario, rows: list[list[Cell]], tables: list[ReportTable]
    ) -> None:
        closed = extensions.example1_biases(ro.v_q_o, ro.v_a_o, ro.Delta)
        pipeline = extensions.example1_via_theorem(ro.v_q_o, ro.v_a_o, ro.Delta)
        entries = [
            ("a3", closed.ratio_a3, closed.bias_a3, pipeline.bias_a3),
            ("a4", closed.ratio_a4, closed.bias_a4, pipeline.bias_a4),
            ("theta", closed.ratio_theta, closed.bias_theta, pipeline.bias_theta),
        ]
        table_rows: list[list[Cell]] = []
        for item, ratio, bias, via_solver in entries:
            rows.append(["bias", item, "ratio_to_delta", ratio])
            rows.append(["bias", item, "bias", bias])
            rows.append(["bias", item, "pipeline_bias", via_solver])
            table_rows.append([item, ratio, bias, via_solver])
        tables.append(
            ReportTable(
                title="Biases with direct caliber signals",
                columns=["quantity", "ratio_to_delta", "bias", "pipeline_bias"],
                rows=table_rows,
            )
        )

    @staticmethod
    def _solve_multi_attribute(
        ms: MultiAttributeScenario, rows: list[list[Cell]], tables: list[ReportTable]
    ) -> None:
        closed = extensions.example2_biases(ms)
        pipeline = extensions.example2_via_theorem(ms)
        entries = [
            ("a2", closed.bias_a2, pipeline.bias_a2),
            ("m1", closed.bias_m1, pipeline.bias_m1),
            ("theta1", closed.bias_theta1, pipeline.bias_theta1),
        ]
        table_rows: list[list[Cell]] = []
        for item, bias, via_solver in entries:
            rows.append(["bias", item, "bias", bias])
            rows.append(["bias", item, "pipeline_bias", via_solver])
            table_rows.append([item, bias, via_solver])
        tables.append(
            ReportTable(
                title="Biases about talent, morality and discrimination",
                columns=["quantity", "bias", "pipeline_bias"],
                rows=table_rows,
            )
        )

    @staticmethod
    def _solve_raw(raw: RawScenario, rows: list[list[Cell]], tables: list[ReportTable]) -> None:
        belief = solve(raw.model, raw.true_f, raw.constraint)
        bias = belief.bias(raw.true_f)
        divergence = kl_at(raw.model, raw.true_f, belief)
        fundamental_rows: list[list[Cell]] = []
        for j in range(raw.model.L):
            name = f"f_{j + 1}"
            believed = float(belief.f_tilde.values[j])
            rows.append(["fundamental", name, "belief", believed])
            rows.append(["fundamental", name, "bias", float(bias[j])])
            fundamental_rows.append([name, float(raw.true_f.values[j]), believed, float(bias[j])])
        for j in range(raw.model.D):
            for k in range(raw.model.D):
                rows.append(["sigma_tilde", f"{j + 1}:{k + 1}", "sigma_tilde", float(belief.sigma_tilde[j, k])])
        case = raw.constraint.case.value
        rows.append(["summary", "constraint", "case", case])
        rows.append(["summary", "fit", "kl_divergence", divergence])
        tables += [
            ReportTable(
                title=f"Long-run beliefs (Case {case})",
                columns=["fundamental", "true", "belief", "bias"],
                rows=fundamental_rows,
            ),
            ReportTable(
                title="Fit",
                columns=["kl_divergence"],
                rows=[[divergence]],
            ),
        ]

    # -- sweep ---------------------------------------------------------------

    def sweep(self, target: DomainScenario, param: str, grid: Sequence[float]) -> ReportBundle:
        """One report row per grid point and bias column, with monotonicity flags."""
        if isinstance(target, RawScenario | MultiAttributeScenario):
            raise UnknownParameter(
                f"sweeps are not defined for {type(target).__name__}", param=param
            )
        result = sweep(target, param, grid)
        rows: list[list[Cell]] = [
            [value, column, row[c], result.trends[column].value]
            for value, row in zip(result.grid, result.rows, strict=True)
            for c, column in enumerate(result.columns)
        ]
        return ReportBundle(
            provenance=self._provenance(
                Command.SWEEP, param=param, grid=",".join(repr(v) for v in result.grid)
            ),
            header=CSV_HEADERS[Command.SWEEP],
            rows=rows,
            tables=[
                ReportTable(
                    title=f"Sweep over {param}",
                    columns=[param, *result.columns],
                    rows=[[value, *row] for value, row in zip(result.grid, result.rows, strict=True)],
                ),
                ReportTable(
                    title="Trend of |bias| along the grid",
                    columns=["quantity", "trend"],
                    rows=[[column, result.trends[column].value] for column in result.columns],
                ),
            ],
        )

    # -- simulate ------------------------------------------------------------

    def simulate(
        self, target: DomainScenario, steps: int, checkpoints: Sequence[int], seed: int
    ) -> ReportBundle:
        """Convergence trace of one seeded sample path and the final comparison."""
        model, true_f, constraint = model_triple(target)
        trace = convergence_trace(model, true_f, constraint, steps, checkpoints, seed)
        labels = fundamental_labels(target, model.L)
        rows: list[list[Cell]] = [
            [point.t, point.distance, *(float(v) for v in point.belief.f_tilde.values)]
            for point in trace.checkpoints
        ]
        final: FloatArray = trace.final.belief.f_tilde.values
        limit: FloatArray = trace.limit.f_tilde.values
        comparison: list[list[Cell]] = [
            [labels[j], float(true_f.values[j]), float(final[j]), float(limit[j]), float(final[j] - limit[j])]
            for j in range(model.L)
        ]
        return ReportBundle(
            provenance=self._provenance(
                Command.SIMULATE,
                seed=seed,
                steps=str(steps),
                checkpoints=",".join(str(t) for t in trace.steps),
                case=constraint.case.value,
            ),
            header=CSV_HEADERS[Command.SIMULATE] + [f"f_{j + 1}" for j in range(model.L)],
            rows=rows,
            tables=[
                ReportTable(
                    title="Distance to the long-run belief",
                    columns=["t", "distance"],
                    rows=[[point.t, point.distance] for point in trace.checkpoints],
                ),
                ReportTable(
                    title=f"Final belief at t={trace.final.t} against the limit solver",
                    columns=["fundamental", "true", "final_belief", "limit", "difference"],
                    rows=comparison,
                ),
            ],
        )

    # -- verify --------------------------------------------------------------

    def verify(self, report: SuiteReport, suite: str, instances: int, seed: int) -> ReportBundle:
        """Per-check pass counts and smallest margins; failing instances serialized."""
        rows: list[list[Cell]] = [
            [suite_name, check, passed, total, margin]
            for (suite_name, check), (passed, total, margin) in report.summary().items()
        ]
        notes = [
            f"FAILED {result.suite}/{result.name} instance {result.instance}: "
            + json.dumps(result.details, sort_keys=True, default=str)
            for result in report.failures
        ]
        return ReportBundle(
            provenance=self._provenance(
                Command.VERIFY, seed=seed, suite=suite, instances=str(instances)
            ),
            header=CSV_HEADERS[Command.VERIFY],
            rows=rows,
            tables=[
                ReportTable(
                    title=f"Verification ({'pass' if report.passed else 'FAIL'})",
                    columns=["suite", "check", "passed", "total", "min_margin"],
                    rows=rows,
                )
            ],
            notes=notes,
        )
