"""Extensions of the society model.

Every closed form here has a matching model construction so the generic
Case III solver (or the numeric oracle) can reproduce it.
"""

import numpy as np
import structlog
from scipy import linalg

from misbelief.core.errors import InvalidModel, InvalidScenario
from misbelief.core.linalg import FloatArray, as_matrix, check_positive_definite, frozen
from misbelief.models.belief import DogmaticConstraint
from misbelief.models.extensions import (
    ContactBiases,
    ContactScenario,
    CorrelatedBiases,
    CorrelatedScenario,
    GroupTag,
    MultiAttributeBiases,
    MultiAttributeScenario,
    RicherObservations,
)
from misbelief.models.gaussian import FundamentalsVector, LinearGaussianModel
from misbelief.models.society import BiasReport, Scenario
from misbelief.services.limit_solver import numeric_oracle, solve_case3
from misbelief.services.society import build_model, classify_biases

logger = structlog.get_logger()

ModelTriple = tuple[LinearGaussianModel, FundamentalsVector, DogmaticConstraint]

# Neutral tag threshold on recognition-error covariances
NEUTRAL_TOL = 1e-12


# ---------------------------------------------------------------------------
# Correlated recognition errors
# ---------------------------------------------------------------------------


def correlated_model(cs: CorrelatedScenario) -> ModelTriple:
    """M = Id, Σ = Σ_q, fundamentals the calibers, agent's own caliber pinned."""
    model = LinearGaussianModel.create(np.eye(cs.I), cs.Sigma_q)
    return model, FundamentalsVector.create(cs.A), DogmaticConstraint.case3(cs.agent, cs.a_tilde_i)


def _tags(covariances: FloatArray) -> tuple[GroupTag, ...]:
    return tuple(
        GroupTag.IN_GROUP
        if value > NEUTRAL_TOL
        else GroupTag.OUT_GROUP
        if value < -NEUTRAL_TOL
        else GroupTag.NEUTRAL
        for value in covariances
    )


def correlated_biases(cs: CorrelatedScenario) -> CorrelatedBiases:
    """Caliber biases when recognition errors are correlated.

    ã_j − A_j = Σ_q[i, j] / Σ_q[i, i] · Δ, the covariance bias is the outer
    product of those biases, and individuals are tagged in-group or
    out-group by the sign of their error covariance with the agent.
    """
    column = cs.Sigma_q[:, cs.agent]
    caliber_bias = column / column[cs.agent] * cs.delta
    caliber_bias[cs.agent] = cs.delta
    return CorrelatedBiases(
        caliber_bias=frozen(caliber_bias),
        sigma_bias=frozen(np.outer(caliber_bias, caliber_bias)),
        group_tags=_tags(column),
    )


def correlated_via_theorem(cs: CorrelatedScenario) -> CorrelatedBiases:
    """Same biases from the Case III solver on M = Id."""
    model, true_f, constraint = correlated_model(cs)
    belief = solve_case3(model, true_f, constraint)
    return CorrelatedBiases(
        caliber_bias=frozen(belief.bias(true_f)),
        sigma_bias=frozen(np.array(belief.sigma_tilde - model.Sigma)),
        group_tags=_tags(cs.Sigma_q[:, cs.agent]),
    )


def relative_covariance_gap(cs: CorrelatedScenario) -> float:
    """max_j |Σ̃[i, j]/Σ̃[i, i] − Σ_q[i, j]/Σ_q[i, i]| at the long-run belief.

    The agent misjudges the level of noise but not how the others' noise
    co-moves with their own.
    """
    model, true_f, constraint = correlated_model(cs)
    sigma_tilde = solve_case3(model, true_f, constraint).sigma_tilde
    i = cs.agent
    believed = sigma_tilde[:, i] / sigma_tilde[i, i]
    actual = cs.Sigma_q[:, i] / cs.Sigma_q[i, i]
    return float(np.max(np.abs(believed - actual)))


def combined_model(s: Scenario, Sigma_q: object) -> ModelTriple:
    """Society model whose recognition errors are correlated.

    Σ = blockdiag(Σ_q, diag(v_eta)) replaces the diagonal recognition
    variances of ``build_model``.
    """
    covariance = as_matrix(Sigma_q, "Sigma_q")
    if covariance.shape != (s.I, s.I):
        raise InvalidScenario("Sigma_q must be I×I", shape=covariance.shape, I=s.I)
    try:
        check_positive_definite(covariance, "Sigma_q")
    except InvalidModel as e:
        raise InvalidScenario(e.message, **e.details) from e
    base, true_f, constraint = build_model(s)
    Sigma = linalg.block_diag(covariance, np.diag(s.v_eta))
    return base.with_sigma(Sigma), true_f, constraint


def combined_biases(s: Scenario, Sigma_q: object) -> BiasReport:
    """Biases of the combined correlated-errors society via the Case III solver."""
    model, true_f, constraint = combined_model(s, Sigma_q)
    belief = solve_case3(model, true_f, constraint)
    delta = belief.bias(true_f)
    caliber_bias = frozen(delta[: s.I].copy())
    return BiasReport(
        theta_bias=frozen(delta[s.I :].copy()),
        caliber_bias=caliber_bias,
        sigma_bias=frozen(np.array(belief.sigma_tilde - model.Sigma)),
        classifications=classify_biases(caliber_bias, s.delta),
    )


def additive_numerators(s: Scenario, Sigma_q: FloatArray) -> FloatArray:
    """Σ_q[i, j] + Σ_k c_ik·c_jk·v_eta_k for every j: the two channels side by side."""
    row = s.agent_row.astype(np.float64)
    return np.asarray(Sigma_q[:, s.agent] + s.C.astype(np.float64) @ (row * s.v_eta))


# ---------------------------------------------------------------------------
# Personal contact
# ---------------------------------------------------------------------------


def contact_model(ks: ContactScenario) -> ModelTriple:
    """Recognitions, the discrimination signal and direct caliber signals stacked.

    M = [[Id, c], [0, 1], [Id, 0]], Σ = diag(v_q, v_eta, v_a); fundamentals
    (A_1..A_I, Θ).
    """
    individuals = ks.I
    M = np.block(
        [
            [np.eye(individuals), ks.c.reshape(-1, 1)],
            [np.zeros((1, individuals)), np.ones((1, 1))],
            [np.eye(individuals), np.zeros((individuals, 1))],
        ]
    )
    Sigma = np.diag(np.concatenate([ks.v_q, [ks.v_eta], ks.v_a]))
    model = LinearGaussianModel.create(M, Sigma)
    true_f = FundamentalsVector.create(np.append(ks.A, ks.Theta))
    return model, true_f, DogmaticConstraint.case3(ks.agent, ks.a_tilde_i)


def contact_biases(ks: ContactScenario) -> ContactBiases:
    """Closed-form biases with personal contact and common variances.

    With d = (v_q + v_eta)(v_q + v_a) + (I − 1)·v_q·v_eta:

        θ̃ − Θ     = −v_eta·(v_q + v_a)·c_i / d · Δ
        ã_j − A_j = v_eta·v_a·c_i·c_j / d · Δ      (j ≠ i)

    Raises:
        InvalidScenario: If the variances differ across individuals
    """
    if not ks.homogeneous:
        raise InvalidScenario(
            "closed form needs common v_q and v_a; use heterogeneous_contact_biases",
            invariant="homogeneous variances",
        )
    v_q, v_a, v_eta = float(ks.v_q[0]), float(ks.v_a[0]), ks.v_eta
    c_i = float(ks.c[ks.agent])
    denominator = (v_q + v_eta) * (v_q + v_a) + (ks.I - 1) * v_q * v_eta
    theta_bias = -v_eta * (v_q + v_a) * c_i / denominator * ks.delta
    caliber_bias = v_eta * v_a * c_i * ks.c / denominator * ks.delta
    caliber_bias[ks.agent] = ks.delta
    return ContactBiases(theta_bias=float(theta_bias), caliber_bias=frozen(caliber_bias))


def contact_via_theorem(ks: ContactScenario) -> ContactBiases:
    model, true_f, constraint = contact_model(ks)
    delta = solve_case3(model, true_f, constraint).bias(true_f)
    return ContactBiases(theta_bias=float(delta[-1]), caliber_bias=frozen(delta[:-1].copy()))


def heterogeneous_contact_biases(ks: ContactScenario, seed: int | None = None) -> ContactBiases:
    """Biases with person-specific variances, by direct KL minimisation."""
    model, true_f, constraint = contact_model(ks)
    belief = numeric_oracle(model, true_f, constraint, seed=seed)
    delta = belief.bias(true_f)
    logger.debug("Heterogeneous contact solved", I=ks.I, theta_bias=float(delta[-1]))
    return ContactBiases(theta_bias=float(delta[-1]), caliber_bias=frozen(delta[:-1].copy()))


def relationship_gram_identity(c: object) -> bool:
    """Exact integer check of (ccᵀ)² = I·ccᵀ for a ±1 vector c."""
    signs = np.asarray(c)
    if signs.ndim != 1 or not np.all(np.isin(signs, (-1, 1))):
        raise InvalidScenario("c entries must be -1 or 1", invariant="c_j in {-1, 1}")
    outer = np.outer(signs, signs).astype(np.int64)
    return bool(np.array_equal(outer @ outer, signs.size * outer))


# ---------------------------------------------------------------------------
# Richer observations: direct caliber signals about the out-group
# ---------------------------------------------------------------------------

RICHER_SIGNS = (1.0, 1.0, -1.0, -1.0)


def richer_observations_model(v_q_o: float, v_a_o: float, delta: float = 1.0) -> ModelTriple:
    """Nine signals about (a_1..a_4, θ).

    Rows: recognitions q_1..q_4 with θ-loadings (1, 1, −1, −1), the
    discrimination signal η, then direct caliber signals a_1..a_4.
    Out-group (individuals 3 and 4) recognition and direct-signal variances
    are v_q_o and v_a_o; all other variances are 1. The agent is individual 1
    with all true fundamentals 0.
    """
    for value, name in ((v_q_o, "v_q_o"), (v_a_o, "v_a_o")):
        if not np.isfinite(value) or value <= 0:
            raise InvalidScenario(f"{name} must be strictly positive", invariant=f"{name} > 0")
    signs = np.array(RICHER_SIGNS).reshape(-1, 1)
    M = np.block(
        [
            [np.eye(4), signs],
            [np.zeros((1, 4)), np.ones((1, 1))],
            [np.eye(4), np.zeros((4, 1))],
        ]
    )
    Sigma = np.diag([1.0, 1.0, v_q_o, v_q_o, 1.0, 1.0, 1.0, v_a_o, v_a_o])
    model = LinearGaussianModel.create(M, Sigma)
    return model, FundamentalsVector.create(np.zeros(5)), DogmaticConstraint.case3(0, delta)


def example1_biases(v_q_o: float, v_a_o: float, Delta: float) -> RicherObservations:
    """Bias ratios about the two competitors and about discrimination.

        ã_3 / Δ = ã_4 / Δ = −2·v_a_o / (5·v_q_o + 5·v_a_o + 4)
        θ̃ / Δ            = −2·(v_q_o + v_a_o) / (5·v_q_o + 5·v_a_o + 4)
    """
    for value, name in ((v_q_o, "v_q_o"), (v_a_o, "v_a_o")):
        if not np.isfinite(value) or value <= 0:
            raise InvalidScenario(f"{name} must be strictly positive", invariant=f"{name} > 0")
    if not np.isfinite(Delta):
        raise InvalidScenario("Delta must be finite")
    denominator = 5.0 * v_q_o + 5.0 * v_a_o + 4.0
    ratio_a = -2.0 * v_a_o / denominator
    return RicherObservations(
        ratio_a3=ratio_a,
        ratio_a4=ratio_a,
        ratio_theta=-2.0 * (v_q_o + v_a_o) / denominator,
        delta=float(Delta),
    )


def example1_via_theorem(v_q_o: float, v_a_o: float, Delta: float) -> RicherObservations:
    """Same ratios from the Case III solver on the nine-signal model (solved at Δ = 1)."""
    model, true_f, constraint = richer_observations_model(v_q_o, v_a_o, 1.0)
    bias = solve_case3(model, true_f, constraint).bias(true_f)
    return RicherObservations(
        ratio_a3=float(bias[2]),
        ratio_a4=float(bias[3]),
        ratio_theta=float(bias[4]),
        delta=float(Delta),
    )


# ---------------------------------------------------------------------------
# Multi-dimensional attributes
# ---------------------------------------------------------------------------

MULTI_ATTRIBUTE_DESIGN = (
    (1.0, 0.0, 1.0, 0.0),  # q_1 = a'_1 + θ_1
    (0.0, 1.0, -1.0, 0.0),  # q_2 = a'_2 − θ_1
    (0.0, 1.0, 0.0, 1.0),  # b_2 = a'_2 + a_2 = 2a_2 + m_2
    (0.0, 0.0, 1.0, 0.0),  # η_1 = θ_1
)


def multi_attribute_model(ms: MultiAttributeScenario) -> ModelTriple:
    """Fundamentals (a'_1, a'_2, θ_1, a_2) with composites a'_j = a_j + m_j."""
    model = LinearGaussianModel.create(
        np.array(MULTI_ATTRIBUTE_DESIGN), np.diag([ms.v_q1, 1.0, 1.0, ms.v_eta1])
    )
    composite_1 = ms.a1 + ms.m1
    true_f = FundamentalsVector.create([composite_1, ms.a2 + ms.m2, ms.theta1, ms.a2])
    return model, true_f, DogmaticConstraint.case3(0, composite_1 + ms.Delta1)


def example2_biases(ms: MultiAttributeScenario) -> MultiAttributeBiases:
    """Closed-form biases about the out-group member's talent and morality.

    With r = v_q1 / v_eta1: talent is overrated by Δ_1/(1 + r), morality
    underrated by 2Δ_1/(1 + r), discrimination underrated by Δ_1/(1 + r).
    """
    scale = ms.Delta1 / (1.0 + ms.v_q1 / ms.v_eta1)
    return MultiAttributeBiases(bias_a2=scale, bias_m1=-2.0 * scale, bias_theta1=-scale)


def example2_via_theorem(ms: MultiAttributeScenario) -> MultiAttributeBiases:
    model, true_f, constraint = multi_attribute_model(ms)
    bias = solve_case3(model, true_f, constraint).bias(true_f)
    # Morality bias is the composite's bias minus the talent bias.
    return MultiAttributeBiases(
        bias_a2=float(bias[3]),
        bias_m1=float(bias[1] - bias[3]),
        bias_theta1=float(bias[2]),
    )

