"""Biases of an overconfident agent who explains outcomes through group discrimination.

Each individual j has recognition q_j = a_j + Σ_k c_jk θ_k + ε_j and every
group k has a discrimination signal η_k = θ_k + ε_k. Stacking gives the
linear-Gaussian model with M = [[Id, C], [0, Id]] and Σ = diag(v_q, v_eta);
the agent pins their own caliber at ã_i and learns everything else
(Case III). The closed forms below follow from the block inverse

    (MᵀΣ⁻¹M)⁻¹ = [[Σ_q + C Σ_η Cᵀ, −C Σ_η], [−Σ_η Cᵀ, Σ_η]].
"""

import numpy as np
import structlog
from scipy import optimize

from misbelief.core.config import settings
from misbelief.core.errors import InvalidScenario, MismatchedSocieties, NotApplicable
from misbelief.core.linalg import FloatArray
from misbelief.models.belief import DogmaticConstraint
from misbelief.models.gaussian import FundamentalsVector, LinearGaussianModel
from misbelief.models.society import (
    AgreementReport,
    BiasReport,
    Classification,
    CorollaryCheck,
    CorollaryReport,
    GroupAgreement,
    IndividualAgreement,
    Scenario,
    relationship_matrix,
)
from misbelief.services.limit_solver import solve_case3

logger = structlog.get_logger()

# Fractional cut of a discrimination-signal variance in the precision check
VARIANCE_CUT = 0.10
# Individuals joining society as a new competitor group
NEW_COMPETITORS = 2


def _tolerance(delta: float) -> float:
    return settings.classification_tol * max(1.0, abs(delta))


def _sign(value: float, tol: float) -> int:
    if value > tol:
        return 1
    if value < -tol:
        return -1
    return 0


def classify_biases(caliber_bias: FloatArray, delta: float) -> tuple[Classification, ...]:
    """Tag each individual by the sign of the agent's caliber bias about them."""
    tol = _tolerance(delta)
    tags = {
        1: Classification.IN_GROUP_FAVORITISM,
        -1: Classification.OUT_GROUP_DEROGATION,
        0: Classification.UNBIASED,
    }
    return tuple(tags[_sign(float(value), tol)] for value in caliber_bias)


def build_model(
    s: Scenario,
) -> tuple[LinearGaussianModel, FundamentalsVector, DogmaticConstraint]:
    """Stack recognitions and discrimination signals into one linear-Gaussian model.

    Fundamentals are ordered (A_1..A_I, Θ_1..Θ_K); the agent's caliber is
    pinned at ``a_tilde_i`` with the covariance learned (Case III).
    """
    individuals, groups = s.I, s.K
    M = np.block(
        [
            [np.eye(individuals), s.C.astype(np.float64)],
            [np.zeros((groups, individuals)), np.eye(groups)],
        ]
    )
    Sigma = np.diag(np.concatenate([s.v_q, s.v_eta]))
    model = LinearGaussianModel.create(M, Sigma)
    true_f = FundamentalsVector.create(np.concatenate([s.A, s.Theta]))
    constraint = DogmaticConstraint.case3(s.agent, s.a_tilde_i)
    return model, true_f, constraint


def _report(s: Scenario, theta_bias: FloatArray, caliber_bias: FloatArray, sigma_bias: FloatArray) -> BiasReport:
    caliber_bias[s.agent] = s.delta
    for array in (theta_bias, caliber_bias, sigma_bias):
        array.setflags(write=False)
    return BiasReport(
        theta_bias=theta_bias,
        caliber_bias=caliber_bias,
        sigma_bias=sigma_bias,
        classifications=classify_biases(caliber_bias, s.delta),
    )


def biases_closed_form(s: Scenario) -> BiasReport:
    """Biases about discrimination and individuals from the explicit formulas.

    With weights w_k = c_ik·v_eta_k and denominator d = v_q_i + Σ_k c_ik²·v_eta_k:

        θ̃_k − Θ_k = −w_k / d · Δ
        ã_j − A_j = Σ_k c_jk·w_k / d · Δ      (j ≠ i)
    """
    row = s.agent_row.astype(np.float64)
    weights = row * s.v_eta
    denominator = float(s.v_q[s.agent] + np.sum(row**2 * s.v_eta))
    theta_bias = -weights / denominator * s.delta
    caliber_bias = s.C.astype(np.float64) @ weights / denominator * s.delta
    delta = np.concatenate([caliber_bias, theta_bias])
    delta[s.agent] = s.delta
    model, _, _ = build_model(s)
    y = model.M @ delta
    return _report(s, theta_bias, caliber_bias, np.outer(y, y))


def biases_via_theorem(s: Scenario) -> BiasReport:
    """Biases from the generic Case III solver applied to ``build_model``."""
    model, true_f, constraint = build_model(s)
    belief = solve_case3(model, true_f, constraint)
    delta = belief.bias(true_f)
    return _report(
        s,
        delta[s.I :].copy(),
        delta[: s.I].copy(),
        np.array(belief.sigma_tilde - model.Sigma),
    )


def add_group(s: Scenario, memberships: object, v_eta_new: float) -> Scenario:
    """Add group K+1 with no real discrimination (Θ_{K+1} = 0).

    Args:
        s: Scenario to extend
        memberships: Length-I relationship column over {-1, 0, 1}
        v_eta_new: Variance of the new group's discrimination signal
    """
    column = relationship_matrix(np.reshape(np.asarray(memberships, dtype=np.float64), (-1, 1)))
    if column.shape[0] != s.I:
        raise InvalidScenario("memberships must have one entry per individual", I=s.I, length=column.shape[0])
    if not np.isfinite(v_eta_new) or v_eta_new <= 0:
        raise InvalidScenario("v_eta_new must be strictly positive", invariant="v_eta > 0")
    labels = None
    if s.group_labels is not None:
        labels = (*s.group_labels, f"group {s.K + 1}")
    return s.replace(
        C=np.hstack([s.C, column]),
        Theta=np.append(s.Theta, 0.0),
        v_eta=np.append(s.v_eta, v_eta_new),
        group_labels=labels,
    )


def add_individuals(s: Scenario, C_rows: object, A: object, v_q: object) -> Scenario:
    """Append individuals with the given relationship rows, calibers and variances."""
    rows = relationship_matrix(C_rows)
    return s.replace(
        C=np.vstack([s.C, rows]),
        A=np.append(s.A, np.asarray(A, dtype=np.float64)),
        v_q=np.append(s.v_q, np.asarray(v_q, dtype=np.float64)),
    )


def group_partition(s: Scenario) -> list[list[int]] | None:
    """Members of each group when the group structure is partitional, else None.

    Partitional means every individual is a member (c = 1) of exactly one
    group and members of the same group have identical relationship rows.
    """
    if s.K == 0:
        return None
    memberships = s.C == 1
    if not np.all(memberships.sum(axis=1) == 1):
        return None
    groups: list[list[int]] = [list(np.flatnonzero(memberships[:, k])) for k in range(s.K)]
    for members in groups:
        if members and not all(np.array_equal(s.C[j], s.C[members[0]]) for j in members):
            return None
    return [[int(j) for j in members] for members in groups]


def is_partitional(s: Scenario) -> bool:
    return group_partition(s) is not None


def _not_applicable(name: str, error: NotApplicable) -> CorollaryCheck:
    return CorollaryCheck(name=name, applicable=False, passed=False, reason=error.message, details=error.details)


def _require_overconfident(s: Scenario) -> None:
    if s.delta <= _tolerance(s.delta):
        raise NotApplicable("the agent is not overconfident", delta=s.delta)


def _own_group(s: Scenario, partition: list[list[int]]) -> int:
    return next(k for k, members in enumerate(partition) if s.agent in members)


def check_in_group_superiority(s: Scenario) -> CorollaryCheck:
    """The agent overrates their own group's average caliber relative to every other group.

    Margin: min over other non-empty groups of (mean bias about own group −
    mean bias about the other group). With equal true group means this is
    exactly the believed superiority of the own group.
    """
    name = "in_group_superiority"
    try:
        _require_overconfident(s)
        partition = group_partition(s)
        if partition is None:
            raise NotApplicable("group structure is not partitional")
        own = _own_group(s, partition)
        others = [k for k, members in enumerate(partition) if members and k != own]
        if not others:
            raise NotApplicable("no other non-empty group to compare with")
    except NotApplicable as e:
        return _not_applicable(name, e)

    bias = biases_closed_form(s).caliber_bias
    own_mean = float(np.mean(bias[partition[own]]))
    gaps = {k: own_mean - float(np.mean(bias[partition[k]])) for k in others}
    margin = min(gaps.values())
    return CorollaryCheck(
        name=name,
        applicable=True,
        passed=margin > _tolerance(s.delta),
        margin=margin,
        details={"own_group": own, "gaps": gaps},
    )


def check_outsider_comparison(s: Scenario) -> CorollaryCheck:
    """The agent rates their own group, and its lead over another group, above an outsider.

    The outsider is the first member of each other group, with the same
    overconfidence. Applies only to pairs of groups that share no
    relationship of the same sign, so the outsider does not overrate the
    agent's group.
    """
    name = "outsider_comparison"
    try:
        _require_overconfident(s)
        partition = group_partition(s)
        if partition is None:
            raise NotApplicable("group structure is not partitional")
        own = _own_group(s, partition)
        own_row = s.C[partition[own][0]]
        pairs = [
            k
            for k, members in enumerate(partition)
            if members and k != own and np.all(own_row * s.C[members[0]] <= 0)
        ]
        if not pairs:
            raise NotApplicable("no other group without a shared relationship")
    except NotApplicable as e:
        return _not_applicable(name, e)

    mine = biases_closed_form(s).caliber_bias
    margins: dict[int, float] = {}
    for k in pairs:
        theirs = biases_closed_form(s.with_agent(partition[k][0], float(s.A[partition[k][0]]) + s.delta)).caliber_bias
        own_level = float(np.mean(mine[partition[own]]) - np.mean(theirs[partition[own]]))
        lead = own_level - float(np.mean(mine[partition[k]]) - np.mean(theirs[partition[k]]))
        margins[k] = min(own_level, lead)
    margin = min(margins.values())
    return CorollaryCheck(
        name=name,
        applicable=True,
        passed=margin > _tolerance(s.delta),
        margin=margin,
        details={"own_group": own, "margins": margins},
    )


def check_irrelevant_group(s: Scenario) -> CorollaryCheck:
    """Adding a group that includes the agent raises total discrimination bias."""
    name = "irrelevant_group"
    try:
        if abs(s.delta) <= _tolerance(s.delta):
            raise NotApplicable("the agent has no overconfidence", delta=s.delta)
    except NotApplicable as e:
        return _not_applicable(name, e)

    memberships = np.zeros(s.I)
    memberships[s.agent] = 1
    v_new = float(np.mean(s.v_eta)) if s.K else 1.0
    before = biases_closed_form(s).total_discrimination_bias()
    after = biases_closed_form(add_group(s, memberships, v_new)).total_discrimination_bias()
    margin = after - before
    return CorollaryCheck(
        name=name,
        applicable=True,
        passed=margin > _tolerance(s.delta),
        margin=margin,
        details={"before": before, "after": after, "v_eta_new": v_new},
    )


def check_competitor_question(s: Scenario) -> CorollaryCheck:
    """A new group competing with one of the agent's groups polarises the agent's views.

    The new group treats every member of the agent's first group κ as a
    competitor and counts κ's competitors as its members. The agent must
    think better of each other member of κ and worse of each member of the
    new group.
    """
    name = "competitor_question"
    try:
        _require_overconfident(s)
        member_of = np.flatnonzero(s.agent_row == 1)
        if member_of.size == 0:
            raise NotApplicable("the agent is not a member of any group")
        kappa = int(member_of[0])
        column = np.where(s.C[:, kappa] == 1, -1, np.where(s.C[:, kappa] == -1, 1, 0))
        fellows = [j for j in range(s.I) if s.C[j, kappa] == 1 and j != s.agent]
        newcomers = [j for j in range(s.I) if column[j] == 1]
        if not fellows and not newcomers:
            raise NotApplicable("group has no other members and no competitors", group=kappa)
    except NotApplicable as e:
        return _not_applicable(name, e)

    v_new = float(np.mean(s.v_eta))
    before = biases_closed_form(s).caliber_bias
    after = biases_closed_form(add_group(s, column, v_new)).caliber_bias
    gains = [float(after[j] - before[j]) for j in fellows]
    losses = [float(before[j] - after[j]) for j in newcomers]
    margin = min(gains + losses)
    return CorollaryCheck(
        name=name,
        applicable=True,
        passed=margin > _tolerance(s.delta),
        margin=margin,
        details={"group": kappa, "fellows": fellows, "new_group_members": newcomers},
    )


def check_precise_discrimination_signal(s: Scenario) -> CorollaryCheck:
    """Sharper information about one group's discrimination moves bias onto other groups.

    For each group k the agent belongs to or competes with, v_eta_k is cut by
    10%: |θ-bias| about k and total |θ-bias| must fall while |θ-bias| about
    every other such group rises.
    """
    name = "precise_discrimination_signal"
    try:
        if abs(s.delta) <= _tolerance(s.delta):
            raise NotApplicable("the agent has no overconfidence", delta=s.delta)
        involved = [int(k) for k in np.flatnonzero(s.agent_row != 0)]
        if not involved:
            raise NotApplicable("the agent has no relationship with any group")
    except NotApplicable as e:
        return _not_applicable(name, e)

    base = biases_closed_form(s)
    slacks: list[float] = []
    for k in involved:
        v_eta = s.v_eta.copy()
        v_eta[k] *= 1.0 - VARIANCE_CUT
        cut = biases_closed_form(s.replace(v_eta=v_eta))
        slacks.append(abs(base.theta_bias[k]) - abs(cut.theta_bias[k]))
        slacks.append(base.total_discrimination_bias() - cut.total_discrimination_bias())
        slacks.extend(abs(cut.theta_bias[other]) - abs(base.theta_bias[other]) for other in involved if other != k)
    margin = float(min(slacks))
    return CorollaryCheck(
        name=name,
        applicable=True,
        passed=margin > _tolerance(s.delta),
        margin=margin,
        details={"groups": involved, "cut": VARIANCE_CUT},
    )


def competitor_outsiders(s: Scenario, v_eta_new: float) -> Scenario:
    """Society joined by a new group of outsiders competing with every incumbent.

    The newcomers belong only to the new group (c = 1) and every incumbent
    competes with it (c = −1).
    """
    column = -np.ones(s.I)
    grown = add_group(s, column, v_eta_new)
    rows = np.zeros((NEW_COMPETITORS, grown.K))
    rows[:, -1] = 1
    return add_individuals(
        grown,
        rows,
        np.full(NEW_COMPETITORS, float(np.mean(s.A))),
        np.full(NEW_COMPETITORS, float(np.mean(s.v_q))),
    )


def outsider_threshold(s: Scenario) -> float:
    """Smallest v_eta of the outsider group above which the agent overrates every incumbent.

    Bias about incumbent j is (n_j + v)/(d + v)·Δ, increasing in v, so the
    threshold is found by bisection on the smallest incumbent bias.
    """
    incumbents = [j for j in range(s.I) if j != s.agent]
    if not incumbents:
        return 0.0

    def worst(v: float) -> float:
        bias = biases_closed_form(competitor_outsiders(s, v)).caliber_bias
        return float(min(bias[j] for j in incumbents)) / s.delta

    floor = 1e-9 * float(np.max(s.v_eta, initial=1.0))
    if worst(floor) > 0:
        return 0.0
    upper = max(1.0, float(np.sum(s.v_eta)))
    while worst(upper) <= 0:
        upper *= 2.0
    return float(optimize.bisect(worst, floor, upper, xtol=1e-12, rtol=1e-12))


def check_competitor_outsiders(s: Scenario) -> CorollaryCheck:
    """A new competitor group is underrated and, once its signal is noisy enough, unites the rest.

    The outsiders are underrated at any variance; at twice the bisection
    threshold plus one, every incumbent other than the agent is overrated.
    """
    name = "competitor_outsiders"
    try:
        _require_overconfident(s)
    except NotApplicable as e:
        return _not_applicable(name, e)

    threshold = outsider_threshold(s)
    v_check = 2.0 * threshold + 1.0
    grown = competitor_outsiders(s, v_check)
    bias = biases_closed_form(grown).caliber_bias
    slacks = [-float(bias[j]) for j in range(s.I, grown.I)]
    slacks += [float(bias[j]) for j in range(s.I) if j != s.agent]
    margin = min(slacks)
    return CorollaryCheck(
        name=name,
        applicable=True,
        passed=margin > _tolerance(s.delta),
        margin=margin,
        details={"threshold": threshold, "v_eta_checked": v_check},
    )


def corollary_checks(s: Scenario) -> CorollaryReport:
    """Evaluate every comparative-statics check on one scenario."""
    checks = [
        check_in_group_superiority(s),
        check_outsider_comparison(s),
        check_irrelevant_group(s),
        check_competitor_question(s),
        check_precise_discrimination_signal(s),
        check_competitor_outsiders(s),
    ]
    logger.debug(
        "Corollary checks evaluated",
        I=s.I,
        K=s.K,
        applicable=sum(check.applicable for check in checks),
        passed=sum(check.passed for check in checks),
    )
    return CorollaryReport(checks=checks)


def agreement_report(s1: Scenario, s2: Scenario) -> AgreementReport:
    """Where two agents of the same society agree and disagree.

    Raises:
        MismatchedSocieties: If the scenarios differ in anything but the agent
    """
    if not s1.same_society(s2):
        raise MismatchedSocieties("scenarios describe different societies")
    first, second = biases_closed_form(s1), biases_closed_form(s2)
    tol = max(_tolerance(s1.delta), _tolerance(s2.delta))

    groups = tuple(
        GroupAgreement(
            group=k,
            sign_first=_sign(float(first.theta_bias[k]), tol),
            sign_second=_sign(float(second.theta_bias[k]), tol),
            same_relationship=bool(s1.C[s1.agent, k] == s2.C[s2.agent, k]),
        )
        for k in range(s1.K)
    )
    beliefs_first = s1.A + first.caliber_bias
    beliefs_second = s2.A + second.caliber_bias
    individuals = tuple(
        IndividualAgreement(
            individual=j,
            belief_first=float(beliefs_first[j]),
            belief_second=float(beliefs_second[j]),
            agree=abs(float(beliefs_first[j] - beliefs_second[j])) <= tol,
        )
        for j in range(s1.I)
    )
    return AgreementReport(
        first_agent=s1.agent,
        second_agent=s2.agent,
        groups=groups,
        individuals=individuals,
    )
