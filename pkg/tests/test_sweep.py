"""Tests for one-parameter sweeps."""

import pytest

from misbelief.core.errors import InvalidGrid, UnknownParameter
from misbelief.models.extensions import (
    ContactScenario,
    CorrelatedScenario,
    RicherObservationsScenario,
)
from misbelief.models.society import Scenario
from misbelief.services.sweep import Trend, sweep, trend_of


class TestTrend:
    """Tests for monotonicity of bias magnitudes."""

    @pytest.mark.parametrize(
        ("values", "expected"),
        [
            ([0.1, 0.2, 0.3], Trend.INCREASING),
            ([-0.1, -0.2, -0.2], Trend.INCREASING),
            ([0.3, 0.2, 0.1], Trend.DECREASING),
            ([0.5, 0.5, -0.5], Trend.CONSTANT),
            ([0.1, 0.3, 0.2], Trend.MIXED),
            ([1.0], Trend.CONSTANT),
        ],
    )
    def test_trend_of(self, values: list[float], expected: Trend) -> None:
        """Magnitudes decide the trend, not signs."""
        assert trend_of(values) == expected


class TestSocietySweep:
    """Tests for sweeps over society parameters."""

    def test_more_precise_discrimination_signal(self, two_groups: Scenario) -> None:
        """Lowering v_eta shrinks the discrimination bias."""
        result = sweep(two_groups, "v_eta[1]", [2.0, 1.0, 0.5])
        assert result.columns == ["theta_bias[1]", "caliber_bias[1]", "caliber_bias[2]"]
        assert [row[0] for row in result.rows] == pytest.approx([-2.0 / 3.0, -0.5, -1.0 / 3.0])
        assert result.trends["theta_bias[1]"] == Trend.DECREASING
        assert result.trends["caliber_bias[1]"] == Trend.CONSTANT

    def test_overconfidence(self, two_groups: Scenario) -> None:
        """Biases are linear in the agent's belief about themselves."""
        result = sweep(two_groups, "a_tilde_i", [0.5, 1.0, 2.0])
        assert [row[2] for row in result.rows] == pytest.approx([-0.25, -0.5, -1.0])
        assert result.trends["caliber_bias[2]"] == Trend.INCREASING

    @pytest.mark.parametrize("param", ["v_eta[2]", "v_q[0]", "v_q[3]", "Theta", "v_a"])
    def test_unknown_parameter(self, two_groups: Scenario, param: str) -> None:
        """Names and 1-based indices are checked against the society."""
        with pytest.raises(UnknownParameter):
            sweep(two_groups, param, [1.0])

    @pytest.mark.parametrize("grid", [[], [1.0, 0.0], [1.0, float("nan")]])
    def test_invalid_variance_grid(self, two_groups: Scenario, grid: list[float]) -> None:
        """Variance grids must be non-empty, finite and positive."""
        with pytest.raises(InvalidGrid):
            sweep(two_groups, "v_q[1]", grid)

    def test_negative_values_allowed_for_beliefs(self, two_groups: Scenario) -> None:
        """The agent may underrate themselves."""
        result = sweep(two_groups, "a_tilde_i", [-1.0])
        assert result.rows[0][1] == pytest.approx(-1.0)


class TestOtherSweeps:
    """Tests for sweeps over the extension scenarios."""

    def test_correlated(self) -> None:
        """Only the agent's belief can be swept."""
        cs = CorrelatedScenario.create([[1.0, 0.5], [0.5, 1.0]], [0.0, 0.0], 0, 1.0)
        result = sweep(cs, "a_tilde_i", [1.0, 2.0])
        assert [row[1] for row in result.rows] == pytest.approx([0.5, 1.0])
        with pytest.raises(UnknownParameter):
            sweep(cs, "Sigma_q", [1.0])

    def test_contact_group_size(self) -> None:
        """A larger society dilutes every bias."""
        ks = ContactScenario.create(
            c=[1, 1, -1], v_q=1.0, v_a=1.0, v_eta=1.0, A=[0.0, 0.0, 0.0], Theta=0.0, agent=0, a_tilde_i=1.0
        )
        result = sweep(ks, "I", [3, 6, 12])
        assert result.columns == ["theta_bias", "caliber_bias[1]", "caliber_bias[2]", "caliber_bias[3]"]
        assert result.trends["theta_bias"] == Trend.DECREASING
        assert result.trends["caliber_bias[2]"] == Trend.DECREASING

    def test_contact_group_size_must_be_integral(self) -> None:
        """I is a head count."""
        ks = ContactScenario.create(
            c=[1, -1], v_q=1.0, v_a=1.0, v_eta=1.0, A=[0.0, 0.0], Theta=0.0, agent=1, a_tilde_i=1.0
        )
        with pytest.raises(InvalidGrid):
            sweep(ks, "I", [2.5])
        with pytest.raises(InvalidGrid):
            sweep(ks, "I", [1])

    def test_richer_observations(self) -> None:
        """Noisier direct signals about competitors raise the bias about them."""
        target = RicherObservationsScenario(v_q_o=1.0, v_a_o=1.0, Delta=1.0)
        result = sweep(target, "v_a_o", [0.1, 1.0, 10.0])
        assert result.rows[1] == pytest.approx([-1.0 / 7.0, -1.0 / 7.0, -2.0 / 7.0])
        assert result.trends["ratio_a3"] == Trend.INCREASING
        with pytest.raises(UnknownParameter):
            sweep(target, "Delta", [1.0])
