"""Cross-check suites run by ``misbelief verify``.

Each suite draws seeded random instances, evaluates one family of
identities or inequalities, and records a CheckResult per check. A
failing check carries the offending instance so it can be reproduced.
"""

from collections.abc import Callable, Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import structlog

from misbelief.core.config import settings
from misbelief.core.errors import MisbeliefError
from misbelief.core.linalg import FloatArray
from misbelief.models.belief import Case, DogmaticConstraint, RawScenario
from misbelief.models.extensions import (
    ContactScenario,
    GroupTag,
    MultiAttributeBiases,
    MultiAttributeScenario,
    RicherObservations,
)
from misbelief.models.society import CorollaryCheck, Scenario
from misbelief.services import extensions, society
from misbelief.services.instances import (
    instance_rng,
    random_contact_scenario,
    random_correlated_scenario,
    random_overconfident_scenario,
    random_partitional_scenario,
    random_raw_scenario,
    random_scenario,
    random_spd,
)
from misbelief.services.limit_solver import (
    numeric_oracle,
    perturbation_margin,
    projected_gradient_norm,
    solve,
    solve_case1,
    solve_case3,
)

logger = structlog.get_logger()

ORACLE_TOL = 1e-5
EQUIVALENCE_TOL = 1e-10
CONSISTENCY_TOL = 1e-9
GRADIENT_TOL = 1e-6
PIPELINE_TOL = 1e-8
MARGIN_FLOOR = 1e-9
ORACLE_INSTANCES = 20

Details = dict[str, Any]


class Suite(str, Enum):
    """Verification suites."""

    THEOREM1 = "theorem1"
    PROP1 = "prop1"
    COROLLARIES = "corollaries"
    PROP2 = "prop2"
    PROP3 = "prop3"
    EXAMPLES = "examples"
    ALL = "all"


@dataclass
class CheckResult:
    """One named check on one instance.

    ``margin`` is the slack of the check: tolerance minus error for
    agreement checks, the smallest inequality gap otherwise.
    """

    suite: str
    name: str
    instance: int
    passed: bool
    margin: float
    details: Details = field(default_factory=dict)


@dataclass
class SuiteReport:
    """All check results of one or more suites."""

    results: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    @property
    def failures(self) -> list[CheckResult]:
        return [result for result in self.results if not result.passed]

    def summary(self) -> dict[tuple[str, str], tuple[int, int, float]]:
        """(suite, check) -> (passed count, total, smallest margin), in first-seen order."""
        table: dict[tuple[str, str], tuple[int, int, float]] = {}
        for result in self.results:
            key = (result.suite, result.name)
            passed, total, smallest = table.get(key, (0, 0, float("inf")))
            table[key] = (passed + int(result.passed), total + 1, min(smallest, result.margin))
        return table


def _relative_error(actual: FloatArray, expected: FloatArray) -> float:
    scale = max(1.0, float(np.max(np.abs(expected), initial=0.0)))
    return float(np.max(np.abs(actual - expected), initial=0.0)) / scale


def _frobenius_relative(actual: FloatArray, expected: FloatArray) -> float:
    return float(np.linalg.norm(actual - expected)) / max(1.0, float(np.linalg.norm(expected)))


def raw_dict(raw: RawScenario) -> Details:
    """Raw scenario in scenario-file form (1-based pinned index)."""
    constraint = raw.constraint.to_dict()
    if constraint.get("pinned_index") is not None:
        constraint["pinned_index"] += 1
    return {
        "M": raw.model.M.tolist(),
        "Sigma": raw.model.Sigma.tolist(),
        "f": raw.true_f.values.tolist(),
        "constraint": constraint,
    }


def scenario_dict(s: Scenario) -> Details:
    """Society in scenario-file form (1-based agent)."""
    return {
        "C": s.C.tolist(),
        "A": s.A.tolist(),
        "Theta": s.Theta.tolist(),
        "v_q": s.v_q.tolist(),
        "v_eta": s.v_eta.tolist(),
        "agent": s.agent + 1,
        "a_tilde_i": s.a_tilde_i,
    }


def contact_dict(ks: ContactScenario) -> Details:
    return {
        "c": ks.c.tolist(),
        "v_q": ks.v_q.tolist(),
        "v_a": ks.v_a.tolist(),
        "v_eta": ks.v_eta,
        "A": ks.A.tolist(),
        "Theta": ks.Theta,
        "agent": ks.agent + 1,
        "a_tilde_i": ks.a_tilde_i,
    }


class VerificationService:
    """Runs the verification suites.

    Instances are checked in parallel; results come back in instance order
    so a report is reproducible for a given seed.
    """

    def __init__(self, instances: int, seed: int = 0) -> None:
        """Initialize verification service.

        Args:
            instances: Random instances per randomized check
            seed: Seed of the instance streams
        """
        self.instances = instances
        self.seed = seed
        self.logger = logger.bind(service="verification")

    def run(self, suite: Suite) -> SuiteReport:
        """Run one suite, or every suite for ``Suite.ALL``."""
        runners: dict[Suite, Callable[[], list[CheckResult]]] = {
            Suite.THEOREM1: self.theorem1,
            Suite.PROP1: self.prop1,
            Suite.COROLLARIES: self.corollaries,
            Suite.PROP2: self.prop2,
            Suite.PROP3: self.prop3,
            Suite.EXAMPLES: self.examples,
        }
        selected = list(runners) if suite == Suite.ALL else [suite]
        results: list[CheckResult] = []
        for name in selected:
            self.logger.info("Running suite", suite=name.value, instances=self.instances)
            results.extend(runners[name]())
        report = SuiteReport(results=results)
        self.logger.info(
            "Verification complete", checks=len(results), failures=len(report.failures)
        )
        return report

    def _fan_out(self, check: Callable[[int], list[CheckResult]]) -> list[CheckResult]:
        with ThreadPoolExecutor(max_workers=settings.resolved_threads()) as pool:
            batches = list(pool.map(check, range(self.instances)))
        return [result for batch in batches for result in batch]

    @staticmethod
    def _evaluate(
        suite: str, name: str, index: int, details: Details, body: Callable[[], tuple[bool, float]]
    ) -> CheckResult:
        """Run one check; a library error fails the check instead of the suite."""
        try:
            passed, margin = body()
        except MisbeliefError as e:
            return CheckResult(
                suite=suite,
                name=name,
                instance=index,
                passed=False,
                margin=-float("inf"),
                details={**details, "error": e.message, **e.details},
            )
        return CheckResult(suite, name, index, passed, margin, details if not passed else {})

    @staticmethod
    def _within(error: float, tol: float) -> tuple[bool, float]:
        return error <= tol, tol - error

    @staticmethod
    def _positive(margin: float) -> tuple[bool, float]:
        return margin > MARGIN_FLOOR, margin

    # -- theorem1 ------------------------------------------------------------

    def theorem1(self) -> list[CheckResult]:
        """Closed forms against the KL oracle, Case I/III equivalence, optimality."""
        return self._fan_out(self._theorem1_instance)

    def _theorem1_instance(self, index: int) -> list[CheckResult]:
        rng = instance_rng(self.seed, index)
        results: list[CheckResult] = []
        for case in (Case.I, Case.II, Case.III):
            raw = random_raw_scenario(rng, case)
            checks: list[tuple[str, Callable[[RawScenario, int], tuple[bool, float]]]] = [
                (f"oracle_case{case.value}", self._oracle_agreement),
                (f"optimality_case{case.value}", self._optimality),
            ]
            if case == Case.II:
                checks.append(("case2_identity", self._case2_identity))
            if case == Case.III:
                checks.append(("case1_case3_equivalence", self._equivalence))
                checks.append(("linearity", self._linearity))
            details = {"case": case.value, "scenario": raw_dict(raw)}
            for name, check in checks:
                results.append(
                    self._evaluate(
                        "theorem1", name, index, details, lambda c=check, r=raw: c(r, index)
                    )
                )
        return results

    def _oracle_agreement(self, raw: RawScenario, index: int) -> tuple[bool, float]:
        closed = solve(raw.model, raw.true_f, raw.constraint)
        oracle = numeric_oracle(
            raw.model, raw.true_f, raw.constraint, seed=self.seed + index, threads=1
        )
        error = max(
            _relative_error(oracle.f_tilde.values, closed.f_tilde.values),
            _frobenius_relative(oracle.sigma_tilde, closed.sigma_tilde),
        )
        return self._within(error, ORACLE_TOL)

    def _optimality(self, raw: RawScenario, index: int) -> tuple[bool, float]:
        closed = solve(raw.model, raw.true_f, raw.constraint)
        grad_norm, objective = projected_gradient_norm(
            raw.model, raw.true_f, raw.constraint, closed
        )
        descent = perturbation_margin(
            raw.model, raw.true_f, raw.constraint, closed, seed=self.seed + index
        )
        margin = min(GRADIENT_TOL * (1.0 + abs(objective)) - grad_norm, descent)
        return margin >= 0, margin

    def _case2_identity(self, raw: RawScenario, index: int) -> tuple[bool, float]:
        belief = solve(raw.model, raw.true_f, raw.constraint)
        y = raw.model.M @ belief.bias(raw.true_f)
        product = np.linalg.solve(belief.sigma_tilde, raw.model.Sigma + np.outer(y, y))
        return self._within(float(np.max(np.abs(product - np.eye(raw.model.D)))), CONSISTENCY_TOL)

    def _equivalence(self, raw: RawScenario, index: int) -> tuple[bool, float]:
        constraint = raw.constraint
        assert constraint.pinned_index is not None and constraint.pinned_value is not None
        case3 = solve_case3(raw.model, raw.true_f, constraint)
        with_true_sigma = DogmaticConstraint.case1(
            constraint.pinned_index, constraint.pinned_value, raw.model.Sigma
        )
        case1 = solve_case1(raw.model, raw.true_f, with_true_sigma)
        error = _relative_error(case1.f_tilde.values, case3.f_tilde.values)
        return self._within(error, EQUIVALENCE_TOL)

    def _linearity(self, raw: RawScenario, index: int) -> tuple[bool, float]:
        """Doubling the pinned gap doubles every bias."""
        constraint = raw.constraint
        assert constraint.pinned_index is not None and constraint.pinned_value is not None
        truth = float(raw.true_f.values[constraint.pinned_index])
        doubled = DogmaticConstraint.case3(
            constraint.pinned_index, truth + 2.0 * (constraint.pinned_value - truth)
        )
        base = solve_case3(raw.model, raw.true_f, constraint).bias(raw.true_f)
        twice = solve_case3(raw.model, raw.true_f, doubled).bias(raw.true_f)
        return self._within(_relative_error(twice, 2.0 * base), EQUIVALENCE_TOL)

    # -- prop1 ---------------------------------------------------------------

    def prop1(self) -> list[CheckResult]:
        """Closed-form society biases against the Case III pipeline and the oracle."""
        return self._fan_out(self._prop1_instance)

    def _prop1_instance(self, index: int) -> list[CheckResult]:
        rng = instance_rng(self.seed, index)
        s = random_scenario(rng)
        neutral = random_scenario(rng, neutral=True)
        details = {"scenario": scenario_dict(s)}

        def consistency() -> tuple[bool, float]:
            closed = society.biases_closed_form(s)
            return self._within(
                closed.max_abs_difference(society.biases_via_theorem(s)), CONSISTENCY_TOL
            )

        def neutral_zeros() -> tuple[bool, float]:
            report = society.biases_closed_form(neutral)
            others = np.delete(report.caliber_bias, neutral.agent)
            worst = max(
                float(np.max(np.abs(report.theta_bias), initial=0.0)),
                float(np.max(np.abs(others), initial=0.0)),
            )
            return worst == 0.0, -worst

        def sign_rule() -> tuple[bool, float]:
            report = society.biases_closed_form(s)
            row = s.agent_row.astype(np.float64)
            direction = np.sign(s.delta)
            expected_theta = -np.sign(row) * direction
            expected_caliber = np.sign(s.C.astype(np.float64) @ (row * s.v_eta)) * direction
            expected_caliber[s.agent] = direction
            tol = settings.classification_tol * max(1.0, abs(s.delta))

            def observed(values: FloatArray) -> FloatArray:
                return np.where(np.abs(values) > tol, np.sign(values), 0.0)

            mismatches = int(
                np.sum(observed(report.theta_bias) != expected_theta)
                + np.sum(observed(report.caliber_bias) != expected_caliber)
            )
            return mismatches == 0, float(-mismatches)

        def oracle() -> tuple[bool, float]:
            model, true_f, constraint = society.build_model(s)
            belief = numeric_oracle(model, true_f, constraint, seed=self.seed + index, threads=1)
            closed = society.biases_closed_form(s)
            expected = np.concatenate([closed.caliber_bias, closed.theta_bias])
            return self._within(_relative_error(belief.bias(true_f), expected), ORACLE_TOL)

        results = [
            self._evaluate("prop1", "closed_form_vs_pipeline", index, details, consistency),
            self._evaluate(
                "prop1",
                "neutral_agent_zeros",
                index,
                {"scenario": scenario_dict(neutral)},
                neutral_zeros,
            ),
            self._evaluate("prop1", "sign_rule", index, details, sign_rule),
        ]
        if index < ORACLE_INSTANCES:
            results.append(self._evaluate("prop1", "closed_form_vs_oracle", index, details, oracle))
        return results

    # -- corollaries ---------------------------------------------------------

    def corollaries(self) -> list[CheckResult]:
        """Comparative-statics checks on random admissible societies."""
        return self._fan_out(self._corollary_instance)

    def _corollary_instance(self, index: int) -> list[CheckResult]:
        rng = instance_rng(self.seed, index)
        results: list[CheckResult] = []
        for s in (random_partitional_scenario(rng), random_overconfident_scenario(rng)):
            details = {"scenario": scenario_dict(s)}
            try:
                checks = society.corollary_checks(s).checks
            except MisbeliefError as e:
                results.append(
                    CheckResult(
                        "corollaries",
                        "evaluation",
                        index,
                        False,
                        -float("inf"),
                        {**details, "error": e.message},
                    )
                )
                continue
            results += [
                self._corollary_result(index, check, details) for check in checks if check.applicable
            ]
        return results

    @classmethod
    def _corollary_result(cls, index: int, check: CorollaryCheck, details: Details) -> CheckResult:
        """A comparative-statics check passes only with a margin above MARGIN_FLOOR."""
        assert check.margin is not None
        above_floor, margin = cls._positive(check.margin)
        passed = check.passed and above_floor
        failure = {} if passed else {**details, **check.details}
        return CheckResult("corollaries", check.name, index, passed, margin, failure)

    # -- prop2 ---------------------------------------------------------------

    def prop2(self) -> list[CheckResult]:
        """Correlated errors: formulas, covariance identity, homogeneity, additivity."""
        return self._fan_out(self._prop2_instance)

    def _prop2_instance(self, index: int) -> list[CheckResult]:
        rng = instance_rng(self.seed, index)
        cs = random_correlated_scenario(rng)
        combined = random_scenario(rng)
        Sigma_q = random_spd(rng, combined.I)
        details = {
            "Sigma_q": cs.Sigma_q.tolist(),
            "A": cs.A.tolist(),
            "agent": cs.agent + 1,
            "a_tilde_i": cs.a_tilde_i,
        }

        def pipeline() -> tuple[bool, float]:
            closed = extensions.correlated_biases(cs)
            theorem = extensions.correlated_via_theorem(cs)
            error = max(
                _relative_error(theorem.caliber_bias, closed.caliber_bias),
                _relative_error(theorem.sigma_bias, closed.sigma_bias),
            )
            return self._within(error, EQUIVALENCE_TOL)

        def relative_covariance() -> tuple[bool, float]:
            return self._within(extensions.relative_covariance_gap(cs), EQUIVALENCE_TOL)

        def homogeneity() -> tuple[bool, float]:
            """Same-tag pairs are believed more alike, mixed pairs less."""
            biases = extensions.correlated_biases(cs)
            signs = {GroupTag.IN_GROUP: 1.0, GroupTag.OUT_GROUP: -1.0, GroupTag.NEUTRAL: 0.0}
            tags = np.array([signs[tag] for tag in biases.group_tags])
            worst = float(np.min(np.outer(tags, tags) * biases.sigma_bias, initial=0.0))
            tol = 1e-12 * max(1.0, cs.delta**2)
            return worst >= -tol, worst + tol

        def additivity() -> tuple[bool, float]:
            """Caliber-bias numerators add the correlation and group channels."""
            if combined.delta == 0:
                return True, 0.0
            report = extensions.combined_biases(combined, Sigma_q)
            row = combined.agent_row.astype(np.float64)
            denominator = Sigma_q[combined.agent, combined.agent] + float(
                np.sum(row**2 * combined.v_eta)
            )
            numerators = np.delete(
                report.caliber_bias / combined.delta * denominator, combined.agent
            )
            expected = np.delete(extensions.additive_numerators(combined, Sigma_q), combined.agent)
            return self._within(_relative_error(numerators, expected), CONSISTENCY_TOL)

        combined_details = {"scenario": scenario_dict(combined), "Sigma_q": Sigma_q.tolist()}
        return [
            self._evaluate("prop2", "closed_form_vs_pipeline", index, details, pipeline),
            self._evaluate("prop2", "relative_covariance", index, details, relative_covariance),
            self._evaluate("prop2", "perceived_homogeneity", index, details, homogeneity),
            self._evaluate("prop2", "additivity", index, combined_details, additivity),
        ]

    # -- prop3 ---------------------------------------------------------------

    def prop3(self) -> list[CheckResult]:
        """Personal contact: formulas, the ±1 Gram identity, more people lower biases."""
        return self._fan_out(self._prop3_instance)

    def _prop3_instance(self, index: int) -> list[CheckResult]:
        rng = instance_rng(self.seed, index)
        ks = random_contact_scenario(rng)
        signs = rng.choice([-1, 1], size=int(rng.integers(1, 12)))
        details = {"scenario": contact_dict(ks)}

        def as_vector(biases: Any) -> FloatArray:
            return np.append(biases.caliber_bias, biases.theta_bias)

        def pipeline() -> tuple[bool, float]:
            closed = as_vector(extensions.contact_biases(ks))
            theorem = as_vector(extensions.contact_via_theorem(ks))
            return self._within(_relative_error(theorem, closed), PIPELINE_TOL)

        def gram_identity() -> tuple[bool, float]:
            holds = extensions.relationship_gram_identity(signs)
            return holds, 0.0 if holds else -1.0

        def more_people() -> tuple[bool, float]:
            if ks.delta == 0:
                return True, 0.0
            small = extensions.contact_biases(ks)
            large = extensions.contact_biases(ks.resized(ks.I + 1))
            drops = [abs(small.theta_bias) - abs(large.theta_bias)]
            drops += [
                abs(small.caliber_bias[j]) - abs(large.caliber_bias[j])
                for j in range(ks.I)
                if j != ks.agent
            ]
            return self._positive(float(min(drops)) / abs(ks.delta))

        def oracle() -> tuple[bool, float]:
            closed = as_vector(extensions.contact_biases(ks))
            model, true_f, constraint = extensions.contact_model(ks)
            belief = numeric_oracle(model, true_f, constraint, seed=self.seed + index, threads=1)
            return self._within(_relative_error(belief.bias(true_f), closed), ORACLE_TOL)

        results = [
            self._evaluate("prop3", "closed_form_vs_pipeline", index, details, pipeline),
            self._evaluate("prop3", "gram_identity", index, {"c": signs.tolist()}, gram_identity),
            self._evaluate("prop3", "more_people_lower_biases", index, details, more_people),
        ]
        if index < ORACLE_INSTANCES:
            results.append(self._evaluate("prop3", "closed_form_vs_oracle", index, details, oracle))
        return results

    # -- examples ------------------------------------------------------------

    def examples(self) -> list[CheckResult]:
        """The two worked examples at their reference parameters, then at random ones."""
        return list(self._example_checks())

    def _example_checks(self) -> Iterator[CheckResult]:
        def ratios(result: RicherObservations) -> FloatArray:
            return np.array([result.ratio_a3, result.ratio_a4, result.ratio_theta])

        def attribute_biases(result: MultiAttributeBiases) -> FloatArray:
            return np.array([result.bias_a2, result.bias_m1, result.bias_theta1])

        reference_one = np.array([-1.0, -1.0, -2.0]) / 7.0
        for name, computed in (
            ("richer_observations_closed_form", extensions.example1_biases(1.0, 1.0, 1.0)),
            ("richer_observations_pipeline", extensions.example1_via_theorem(1.0, 1.0, 1.0)),
        ):
            values = ratios(computed)
            yield self._evaluate(
                "examples",
                name,
                0,
                {"values": values.tolist()},
                lambda v=values: self._within(_relative_error(v, reference_one), PIPELINE_TOL),
            )

        # Nearly exact direct caliber signals remove the bias about competitors only.
        precise = ratios(extensions.example1_biases(1.0, 1e-12, 1.0))
        yield self._evaluate(
            "examples",
            "richer_observations_precise_signals",
            0,
            {"values": precise.tolist()},
            lambda: self._within(
                _relative_error(precise, np.array([0.0, 0.0, -2.0 / 9.0])), MARGIN_FLOOR
            ),
        )

        reference_two = np.array([0.5, -1.0, -0.5])
        unit = MultiAttributeScenario(
            a2=0.0, m1=0.0, m2=0.0, theta1=0.0, v_q1=1.0, v_eta1=1.0, Delta1=1.0
        )
        for name, biases in (
            ("multi_attribute_closed_form", extensions.example2_biases(unit)),
            ("multi_attribute_pipeline", extensions.example2_via_theorem(unit)),
        ):
            values = attribute_biases(biases)
            yield self._evaluate(
                "examples",
                name,
                0,
                {"values": values.tolist()},
                lambda v=values: self._within(_relative_error(v, reference_two), PIPELINE_TOL),
            )

        for index in range(self.instances):
            rng = instance_rng(self.seed, index)
            v_q_o, v_a_o = (float(v) for v in rng.uniform(0.2, 3.0, 2))
            yield self._evaluate(
                "examples",
                "richer_observations_random",
                index,
                {"v_q_o": v_q_o, "v_a_o": v_a_o},
                lambda q=v_q_o, a=v_a_o: self._within(
                    _relative_error(
                        ratios(extensions.example1_via_theorem(q, a, 1.0)),
                        ratios(extensions.example1_biases(q, a, 1.0)),
                    ),
                    PIPELINE_TOL,
                ),
            )

            ms = MultiAttributeScenario(
                a2=float(rng.normal()),
                m1=float(rng.normal()),
                m2=float(rng.normal()),
                theta1=float(rng.normal()),
                v_q1=float(rng.uniform(0.2, 3.0)),
                v_eta1=float(rng.uniform(0.2, 3.0)),
                Delta1=float(rng.uniform(-3.0, 3.0)),
                a1=float(rng.normal()),
            )
            yield self._evaluate(
                "examples",
                "multi_attribute_random",
                index,
                {"scenario": asdict(ms)},
                lambda m=ms: self._within(
                    _relative_error(
                        attribute_biases(extensions.example2_via_theorem(m)),
                        attribute_biases(extensions.example2_biases(m)),
                    ),
                    PIPELINE_TOL,
                ),
            )
