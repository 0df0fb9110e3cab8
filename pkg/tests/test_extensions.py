"""Tests for correlated errors, personal contact and the richer-observation variants."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from misbelief.core.errors import InvalidScenario
from misbelief.models.extensions import (
    ContactScenario,
    CorrelatedScenario,
    GroupTag,
    MultiAttributeScenario,
)
from misbelief.models.society import Scenario
from misbelief.services.extensions import (
    additive_numerators,
    combined_biases,
    contact_biases,
    contact_model,
    contact_via_theorem,
    correlated_biases,
    correlated_via_theorem,
    example1_biases,
    example1_via_theorem,
    example2_biases,
    example2_via_theorem,
    heterogeneous_contact_biases,
    relationship_gram_identity,
    relative_covariance_gap,
)
from misbelief.services.instances import instance_rng, random_correlated_scenario, random_spd
from misbelief.services.limit_solver import solve_case3
from misbelief.services.society import biases_closed_form

positive = st.floats(min_value=0.05, max_value=20.0)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture
def correlated() -> CorrelatedScenario:
    return CorrelatedScenario.create(
        [[1.0, 0.4, -0.3], [0.4, 1.0, 0.0], [-0.3, 0.0, 1.0]], [0.0, 0.0, 0.0], 0, 1.0
    )


@pytest.fixture
def contact() -> ContactScenario:
    return ContactScenario.create(
        c=[1, 1, -1], v_q=1.0, v_a=1.0, v_eta=1.0, A=[0.0, 0.0, 0.0], Theta=0.0, agent=0, a_tilde_i=1.0
    )


class TestCorrelatedErrors:
    """Tests for correlated recognition errors."""

    def test_biases_follow_covariances(self, correlated: CorrelatedScenario) -> None:
        """Bias about j is Σ_q[i,j]/Σ_q[i,i]·Δ."""
        result = correlated_biases(correlated)
        assert result.caliber_bias.tolist() == pytest.approx([1.0, 0.4, -0.3])
        assert result.group_tags == (GroupTag.IN_GROUP, GroupTag.IN_GROUP, GroupTag.OUT_GROUP)

    def test_neutral_tag(self) -> None:
        """Uncorrelated individuals are neither in- nor out-group."""
        cs = CorrelatedScenario.create(np.eye(2), [0.0, 0.0], 0, 1.0)
        assert correlated_biases(cs).group_tags[1] == GroupTag.NEUTRAL
        assert correlated_biases(cs).caliber_bias[1] == 0.0

    def test_matches_generic_solver(self, correlated: CorrelatedScenario) -> None:
        """Closed form and Case III on M = Id agree."""
        closed = correlated_biases(correlated)
        pipeline = correlated_via_theorem(correlated)
        assert np.allclose(closed.caliber_bias, pipeline.caliber_bias, atol=1e-12)
        assert np.allclose(closed.sigma_bias, pipeline.sigma_bias, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds)
    def test_relative_covariances_are_learned(self, seed: int) -> None:
        """Believed covariances with the agent keep their true ratios."""
        cs = random_correlated_scenario(instance_rng(seed, 0))
        assert relative_covariance_gap(cs) < 1e-9

    def test_rejects_indefinite_covariance(self) -> None:
        """Σ_q must be positive definite."""
        with pytest.raises(InvalidScenario):
            CorrelatedScenario.create([[1.0, 2.0], [2.0, 1.0]], [0.0, 0.0], 0, 1.0)

    def test_channels_add_up(self, two_groups: Scenario) -> None:
        """Correlation and group channels add in the bias numerators."""
        Sigma_q = random_spd(instance_rng(3, 0), two_groups.I)
        report = combined_biases(two_groups, Sigma_q)
        numerators = additive_numerators(two_groups, Sigma_q)
        expected = numerators / numerators[two_groups.agent] * two_groups.delta
        assert np.allclose(report.caliber_bias, expected, atol=1e-10)

    def test_uncorrelated_combination_is_the_society(self, partitional: Scenario) -> None:
        """Diagonal Σ_q = diag(v_q) reproduces the plain society biases."""
        report = combined_biases(partitional, np.diag(partitional.v_q))
        assert report.max_abs_difference(biases_closed_form(partitional)) < 1e-10


class TestContact:
    """Tests for personal contact with direct caliber signals."""

    def test_reference(self, contact: ContactScenario) -> None:
        """d = (v_q+v_eta)(v_q+v_a) + (I−1)v_q·v_eta = 6 at unit variances."""
        result = contact_biases(contact)
        assert result.theta_bias == pytest.approx(-1.0 / 3.0)
        assert result.caliber_bias.tolist() == pytest.approx([1.0, 1.0 / 6.0, -1.0 / 6.0])

    def test_matches_generic_solver(self, contact: ContactScenario) -> None:
        """Closed form and Case III on the stacked model agree."""
        closed = contact_biases(contact)
        pipeline = contact_via_theorem(contact)
        assert pipeline.theta_bias == pytest.approx(closed.theta_bias, abs=1e-12)
        assert np.allclose(pipeline.caliber_bias, closed.caliber_bias, atol=1e-12)

    def test_more_people_lower_biases(self, contact: ContactScenario) -> None:
        """Every bias shrinks as the society grows."""
        small = contact_biases(contact)
        large = contact_biases(contact.resized(6))
        assert abs(large.theta_bias) < abs(small.theta_bias)
        assert np.all(np.abs(large.caliber_bias[1:3]) < np.abs(small.caliber_bias[1:3]))

    def test_heterogeneous_needs_oracle(self, contact: ContactScenario) -> None:
        """The closed form refuses person-specific variances; the oracle solves them."""
        varied = ContactScenario.create(
            c=contact.c, v_q=[1.0, 2.0, 0.5], v_a=1.0, v_eta=1.0, A=contact.A, Theta=0.0, agent=0, a_tilde_i=1.0
        )
        assert not varied.homogeneous
        with pytest.raises(InvalidScenario):
            contact_biases(varied)
        model, true_f, constraint = contact_model(varied)
        expected = solve_case3(model, true_f, constraint).bias(true_f)
        result = heterogeneous_contact_biases(varied)
        assert result.theta_bias == pytest.approx(float(expected[-1]), abs=1e-5)

    @pytest.mark.parametrize("c", [[1], [1, -1], [1, 1, -1, -1, 1]])
    def test_gram_identity(self, c: list[int]) -> None:
        """(ccᵀ)² = I·ccᵀ for any ±1 vector."""
        assert relationship_gram_identity(np.array(c))

    def test_rejects_neutral_entries(self) -> None:
        """Contact relationships are ±1 only."""
        with pytest.raises(InvalidScenario):
            ContactScenario.create(
                c=[1, 0], v_q=1.0, v_a=1.0, v_eta=1.0, A=[0.0, 0.0], Theta=0.0, agent=0, a_tilde_i=1.0
            )

    def test_resize_keeps_agent(self) -> None:
        """Shrinking below the agent is refused."""
        with pytest.raises(InvalidScenario):
            ContactScenario.create(
                c=[1, 1], v_q=1.0, v_a=1.0, v_eta=1.0, A=[0.0, 0.0], Theta=0.0, agent=1, a_tilde_i=1.0
            ).resized(1)


class TestRicherObservations:
    """Tests for direct caliber signals about competitors."""

    def test_reference_ratios(self) -> None:
        """At unit out-group variances the ratios are −1/7, −1/7, −2/7."""
        result = example1_biases(1.0, 1.0, 1.0)
        assert (result.ratio_a3, result.ratio_a4, result.ratio_theta) == pytest.approx(
            (-1.0 / 7.0, -1.0 / 7.0, -2.0 / 7.0)
        )

    def test_precise_direct_signals(self) -> None:
        """Exact caliber signals remove the caliber bias but not the discrimination bias."""
        result = example1_biases(1.0, 1e-12, 1.0)
        assert result.ratio_a3 == pytest.approx(0.0, abs=1e-11)
        assert result.ratio_theta == pytest.approx(-2.0 / 9.0, rel=1e-9)

    def test_biases_scale_with_delta(self) -> None:
        """Biases are the ratios times Δ."""
        result = example1_biases(2.0, 0.5, -3.0)
        assert result.bias_theta == pytest.approx(-3.0 * result.ratio_theta)

    @settings(max_examples=30, deadline=None)
    @given(v_q_o=positive, v_a_o=positive)
    def test_matches_generic_solver(self, v_q_o: float, v_a_o: float) -> None:
        """The nine-signal Case III model reproduces the closed form."""
        closed = example1_biases(v_q_o, v_a_o, 1.0)
        pipeline = example1_via_theorem(v_q_o, v_a_o, 1.0)
        assert pipeline.ratio_a3 == pytest.approx(closed.ratio_a3, abs=1e-9)
        assert pipeline.ratio_a4 == pytest.approx(closed.ratio_a4, abs=1e-9)
        assert pipeline.ratio_theta == pytest.approx(closed.ratio_theta, abs=1e-9)

    def test_rejects_non_positive_variance(self) -> None:
        """Variances must be strictly positive."""
        with pytest.raises(InvalidScenario):
            example1_biases(0.0, 1.0, 1.0)


class TestMultiAttribute:
    """Tests for talent and morality behind one recognition signal."""

    def test_reference(self) -> None:
        """Unit variances, Δ_1 = 1: talent +1/2, morality −1, discrimination −1/2."""
        ms = MultiAttributeScenario(a2=0.0, m1=0.0, m2=0.0, theta1=0.0, v_q1=1.0, v_eta1=1.0, Delta1=1.0)
        for result in (example2_biases(ms), example2_via_theorem(ms)):
            assert result.bias_a2 == pytest.approx(0.5)
            assert result.bias_m1 == pytest.approx(-1.0)
            assert result.bias_theta1 == pytest.approx(-0.5)

    @settings(max_examples=30, deadline=None)
    @given(v_q1=positive, v_eta1=positive, delta=st.floats(min_value=-3.0, max_value=3.0))
    def test_matches_generic_solver(self, v_q1: float, v_eta1: float, delta: float) -> None:
        """Closed form holds for any variances and true attributes."""
        ms = MultiAttributeScenario(
            a2=0.3, m1=-1.2, m2=0.7, theta1=0.4, v_q1=v_q1, v_eta1=v_eta1, Delta1=delta, a1=0.1
        )
        closed = example2_biases(ms)
        pipeline = example2_via_theorem(ms)
        assert pipeline.bias_a2 == pytest.approx(closed.bias_a2, abs=1e-9)
        assert pipeline.bias_m1 == pytest.approx(closed.bias_m1, abs=1e-9)
        assert pipeline.bias_theta1 == pytest.approx(closed.bias_theta1, abs=1e-9)

    def test_rejects_non_positive_variance(self) -> None:
        """v_q1 must be strictly positive."""
        with pytest.raises(InvalidScenario):
            MultiAttributeScenario(a2=0.0, m1=0.0, m2=0.0, theta1=0.0, v_q1=0.0, v_eta1=1.0, Delta1=1.0)
