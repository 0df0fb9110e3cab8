"""Tests for the long-run belief closed forms and the numeric KL oracle."""

import numpy as np
import pytest

from misbelief.core.config import settings
from misbelief.core.errors import IllConditioned, InvalidConstraint
from misbelief.models.belief import (
    Case,
    CovarianceMode,
    DogmaticConstraint,
    PinMode,
    RawScenario,
)
from misbelief.models.gaussian import FundamentalsVector, LinearGaussianModel
from misbelief.services import limit_solver
from misbelief.services.instances import instance_rng, random_raw_scenario
from misbelief.services.limit_solver import (
    kl_at,
    numeric_oracle,
    perturbation_margin,
    projected_gradient_norm,
    solve,
    solve_case1,
    solve_case2,
    solve_case3,
)


class TestDogmaticConstraint:
    """Tests for constraint construction."""

    def test_cases(self) -> None:
        """Factory methods map onto the three cases."""
        assert DogmaticConstraint.case1(0, 1.0, np.eye(2)).case == Case.I
        assert DogmaticConstraint.case2([1.0, 2.0]).case == Case.II
        assert DogmaticConstraint.case3(1, 0.0).case == Case.III

    def test_pin_all_with_fixed_covariance(self) -> None:
        """Nothing would be left to learn."""
        with pytest.raises(InvalidConstraint):
            DogmaticConstraint(
                mode=PinMode.PIN_ALL,
                covariance_mode=CovarianceMode.FIXED,
                pinned_vector=FundamentalsVector.create([0.0]),
                fixed_sigma=np.eye(1),
            )

    def test_case1_needs_positive_definite_sigma(self) -> None:
        """The fixed covariance belief must be positive definite."""
        with pytest.raises(InvalidConstraint):
            DogmaticConstraint.case1(0, 1.0, [[1.0, 2.0], [2.0, 1.0]])

    def test_pinned_index_out_of_range(self, small_model: LinearGaussianModel) -> None:
        """The pinned fundamental must exist."""
        with pytest.raises(InvalidConstraint):
            RawScenario(
                model=small_model,
                true_f=FundamentalsVector.create([0.0, 0.0]),
                constraint=DogmaticConstraint.case3(2, 1.0),
            )

    def test_pinned_vector_length(self, small_model: LinearGaussianModel) -> None:
        """Case II pins every fundamental."""
        with pytest.raises(InvalidConstraint):
            solve_case2(
                small_model,
                FundamentalsVector.create([0.0, 0.0]),
                DogmaticConstraint.case2([1.0, 2.0, 3.0]),
            )

    def test_solver_case_mismatch(self, small_raw: RawScenario) -> None:
        """Each solver accepts only its own case."""
        with pytest.raises(InvalidConstraint):
            solve_case1(small_raw.model, small_raw.true_f, small_raw.constraint)


class TestClosedForms:
    """Tests for the three closed-form cases."""

    def test_case3_pinned_and_propagated(self, small_raw: RawScenario) -> None:
        """The pinned entry holds; the others follow the G⁻¹ column ratios."""
        model = small_raw.model
        belief = solve_case3(model, small_raw.true_f, small_raw.constraint)
        gram = model.M.T @ np.linalg.inv(model.Sigma) @ model.M
        inverse = np.linalg.inv(gram)
        bias = belief.bias(small_raw.true_f)
        assert bias[0] == pytest.approx(1.0)
        assert bias[1] == pytest.approx(inverse[1, 0] / inverse[0, 0], rel=1e-10)
        y = model.M @ bias
        assert np.allclose(belief.sigma_tilde, model.Sigma + np.outer(y, y), atol=1e-12)

    def test_case1_uses_believed_covariance(self, small_model: LinearGaussianModel) -> None:
        """Case I ratios come from G̃ = MᵀΣ̃⁻¹M and Σ̃ is unchanged."""
        sigma_tilde = np.diag([2.0, 0.5, 1.0])
        constraint = DogmaticConstraint.case1(1, 3.0, sigma_tilde)
        true_f = FundamentalsVector.create([1.0, 1.0])
        belief = solve_case1(small_model, true_f, constraint)
        inverse = np.linalg.inv(small_model.M.T @ np.linalg.inv(sigma_tilde) @ small_model.M)
        assert belief.f_tilde.values[1] == 3.0
        expected = inverse[0, 1] / inverse[1, 1] * 2.0
        assert belief.bias(true_f)[0] == pytest.approx(expected, rel=1e-10)
        assert np.array_equal(belief.sigma_tilde, sigma_tilde)

    def test_case2_inflates_covariance(self, small_model: LinearGaussianModel) -> None:
        """Σ̃ = Σ + (MΔ)(MΔ)ᵀ with f̃ the pinned vector."""
        true_f = FundamentalsVector.create([0.0, 0.0])
        belief = solve_case2(small_model, true_f, DogmaticConstraint.case2([1.0, -1.0]))
        y = small_model.M @ np.array([1.0, -1.0])
        assert np.array_equal(belief.f_tilde.values, [1.0, -1.0])
        assert np.allclose(belief.sigma_tilde, small_model.Sigma + np.outer(y, y))

    def test_case1_at_true_covariance_equals_case3(self, small_raw: RawScenario) -> None:
        """Fixing Σ̃ = Σ gives the Case III fundamentals."""
        model, true_f = small_raw.model, small_raw.true_f
        case1 = solve_case1(model, true_f, DogmaticConstraint.case1(0, 1.0, model.Sigma))
        case3 = solve_case3(model, true_f, small_raw.constraint)
        assert np.allclose(case1.f_tilde.values, case3.f_tilde.values, atol=1e-12)

    def test_zero_overconfidence_is_unbiased(self, small_model: LinearGaussianModel) -> None:
        """Pinning a fundamental at its true value changes nothing."""
        true_f = FundamentalsVector.create([0.4, -0.2])
        belief = solve(small_model, true_f, DogmaticConstraint.case3(0, 0.4))
        assert np.allclose(belief.f_tilde.values, true_f.values)
        assert np.allclose(belief.sigma_tilde, small_model.Sigma)

    @pytest.mark.parametrize("gap", [-2.5, 0.5, 3.0])
    def test_bias_is_linear_in_overconfidence(self, small_raw: RawScenario, gap: float) -> None:
        """Scaling Δ_i scales every bias."""
        model, true_f = small_raw.model, small_raw.true_f
        unit = solve_case3(model, true_f, DogmaticConstraint.case3(0, 1.0)).bias(true_f)
        scaled = solve_case3(model, true_f, DogmaticConstraint.case3(0, gap)).bias(true_f)
        assert np.allclose(scaled, gap * unit, atol=1e-12)

    def test_ill_conditioned_design(self) -> None:
        """Nearly collinear columns are refused rather than solved."""
        model = LinearGaussianModel.create([[1.0, 1.0], [1.0, 1.0 + 1e-7]], np.eye(2))
        with pytest.raises(IllConditioned):
            solve_case3(model, FundamentalsVector.create([0.0, 0.0]), DogmaticConstraint.case3(0, 1.0))


class TestNumericOracle:
    """Tests for direct KL minimisation."""

    def test_agrees_with_case3(self, small_raw: RawScenario) -> None:
        """Oracle and closed form land on the same belief."""
        closed = solve(small_raw.model, small_raw.true_f, small_raw.constraint)
        oracle = numeric_oracle(small_raw.model, small_raw.true_f, small_raw.constraint)
        assert np.allclose(oracle.f_tilde.values, closed.f_tilde.values, atol=1e-5)
        assert np.allclose(oracle.sigma_tilde, closed.sigma_tilde, atol=1e-5)

    def test_agrees_with_case1(self, small_model: LinearGaussianModel) -> None:
        """Fixed covariance: only the free fundamentals move."""
        true_f = FundamentalsVector.create([0.0, 1.0])
        constraint = DogmaticConstraint.case1(0, 1.0, np.diag([2.0, 0.5, 1.0]))
        closed = solve_case1(small_model, true_f, constraint)
        oracle = numeric_oracle(small_model, true_f, constraint)
        assert np.allclose(oracle.f_tilde.values, closed.f_tilde.values, atol=1e-5)

    def test_thread_cap_overrides_settings(
        self, small_raw: RawScenario, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """threads=1 runs every start inline even when settings allow a pool."""

        def no_pool(*args: object, **kwargs: object) -> None:
            raise AssertionError("starts were sent to a worker pool")

        monkeypatch.setattr(settings, "threads", 4)
        monkeypatch.setattr(limit_solver, "ThreadPoolExecutor", no_pool)
        closed = solve(small_raw.model, small_raw.true_f, small_raw.constraint)
        oracle = numeric_oracle(
            small_raw.model, small_raw.true_f, small_raw.constraint, threads=1
        )
        assert np.allclose(oracle.f_tilde.values, closed.f_tilde.values, atol=1e-5)

    def test_single_point_support(self) -> None:
        """Case I with L = 1 leaves nothing to optimise."""
        model = LinearGaussianModel.create([[1.0], [2.0]], np.eye(2))
        belief = numeric_oracle(
            model, FundamentalsVector.create([0.0]), DogmaticConstraint.case1(0, 2.0, np.eye(2))
        )
        assert belief.f_tilde.values[0] == 2.0

    def test_closed_form_is_a_stationary_minimum(self, small_raw: RawScenario) -> None:
        """Gradient vanishes and random perturbations only raise the KL."""
        model, true_f, constraint = small_raw.model, small_raw.true_f, small_raw.constraint
        belief = solve(model, true_f, constraint)
        grad_norm, value = projected_gradient_norm(model, true_f, constraint, belief)
        assert grad_norm < 1e-6
        assert value == pytest.approx(kl_at(model, true_f, belief), abs=1e-12)
        assert perturbation_margin(model, true_f, constraint, belief) > 0.0

    @pytest.mark.slow
    @pytest.mark.parametrize("case", [Case.I, Case.II, Case.III])
    def test_random_instances(self, case: Case) -> None:
        """Oracle matches the closed form on seeded random models."""
        for index in range(5):
            raw = random_raw_scenario(instance_rng(11, index), case, max_D=5, max_L=3)
            closed = solve(raw.model, raw.true_f, raw.constraint)
            oracle = numeric_oracle(raw.model, raw.true_f, raw.constraint)
            assert oracle.distance(closed) < 1e-4
