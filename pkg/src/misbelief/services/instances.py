"""Seeded random instances for the verification suites and tests.

Every generator takes a numpy ``Generator`` so callers control seeding;
``instance_rng`` derives an independent stream per instance index.
"""

import numpy as np

from misbelief.core.errors import InvalidModel
from misbelief.core.linalg import FloatArray
from misbelief.models.belief import Case, DogmaticConstraint, RawScenario
from misbelief.models.extensions import ContactScenario, CorrelatedScenario
from misbelief.models.gaussian import FundamentalsVector, LinearGaussianModel
from misbelief.models.society import Scenario

MAX_DELTA = 3.0


def instance_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for instance ``index`` of a suite seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))


def random_spd(rng: np.random.Generator, dim: int, spread: float = 0.5) -> FloatArray:
    """Positive definite matrix LLᵀ from a random lower-triangular factor.

    Diagonal entries of L lie in [0.5, 1.5]; off-diagonal entries are normal
    with standard deviation ``spread``.
    """
    chol = np.tril(spread * rng.standard_normal((dim, dim)), k=-1)
    chol[np.diag_indices(dim)] = rng.uniform(0.5, 1.5, dim)
    matrix = chol @ chol.T
    return np.asarray((matrix + matrix.T) / 2.0)


def random_model(rng: np.random.Generator, max_D: int = 8, max_L: int = 6) -> LinearGaussianModel:
    """Random full-rank design with a random covariance, D ≥ L."""
    for _ in range(100):
        L = int(rng.integers(1, max_L + 1))
        D = int(rng.integers(L, max_D + 1))
        try:
            return LinearGaussianModel.create(rng.standard_normal((D, L)), random_spd(rng, D))
        except InvalidModel:
            continue
    raise InvalidModel("could not draw a well-posed random model")


def random_raw_scenario(
    rng: np.random.Generator, case: Case, max_D: int = 8, max_L: int = 6
) -> RawScenario:
    """Random model, fundamentals and a constraint of the requested case with |Δ_i| ≤ 3."""
    model = random_model(rng, max_D, max_L)
    true_f = FundamentalsVector.create(rng.normal(0.0, 2.0, model.L))
    index = int(rng.integers(model.L))
    pinned = float(true_f.values[index] + rng.uniform(-MAX_DELTA, MAX_DELTA))
    if case == Case.I:
        constraint = DogmaticConstraint.case1(index, pinned, random_spd(rng, model.D))
    elif case == Case.II:
        offsets = rng.uniform(-MAX_DELTA, MAX_DELTA, model.L) / np.sqrt(model.L)
        constraint = DogmaticConstraint.case2(true_f.values + offsets)
    else:
        constraint = DogmaticConstraint.case3(index, pinned)
    return RawScenario(model=model, true_f=true_f, constraint=constraint)


def random_scenario(
    rng: np.random.Generator,
    max_I: int = 6,
    max_K: int = 3,
    min_delta: float = -MAX_DELTA,
    neutral: bool = False,
) -> Scenario:
    """Random society; ``neutral`` gives the agent no relationship with any group."""
    individuals = int(rng.integers(1, max_I + 1))
    groups = int(rng.integers(0, max_K + 1))
    C = rng.integers(-1, 2, size=(individuals, groups))
    agent = int(rng.integers(individuals))
    if neutral:
        C[agent] = 0
    A = rng.normal(0.0, 1.0, individuals)
    return Scenario.create(
        C=C,
        A=A,
        Theta=rng.normal(0.0, 1.0, groups),
        v_q=rng.uniform(0.2, 3.0, individuals),
        v_eta=rng.uniform(0.2, 3.0, groups),
        agent=agent,
        a_tilde_i=float(A[agent] + rng.uniform(min_delta, MAX_DELTA)),
    )


def random_overconfident_scenario(rng: np.random.Generator, max_I: int = 6, max_K: int = 3) -> Scenario:
    """Random society whose agent is a member of at least one group and overconfident."""
    s = random_scenario(rng, max_I=max(2, max_I), max_K=max(1, max_K), min_delta=0.5)
    while s.K == 0 or s.I < 2:
        s = random_scenario(rng, max_I=max(2, max_I), max_K=max(1, max_K), min_delta=0.5)
    C = np.array(s.C)
    C[s.agent, int(rng.integers(s.K))] = 1
    return s.replace(C=C)


def random_partitional_scenario(rng: np.random.Generator, max_I: int = 6, max_K: int = 3) -> Scenario:
    """Random partitional society with an overconfident agent.

    Each individual belongs to exactly one group; a group's members share a
    relationship row that is 1 on their own group and −1 or 0 elsewhere.
    """
    groups = int(rng.integers(2, max(2, max_K) + 1))
    individuals = int(rng.integers(groups, max(groups, max_I) + 1))
    assignment = np.concatenate([np.arange(groups), rng.integers(0, groups, individuals - groups)])
    rng.shuffle(assignment)
    relations = -rng.integers(0, 2, size=(groups, groups))
    np.fill_diagonal(relations, 1)
    C = relations[assignment]
    agent = int(rng.integers(individuals))
    A = rng.normal(0.0, 1.0, individuals)
    return Scenario.create(
        C=C,
        A=A,
        Theta=rng.normal(0.0, 1.0, groups),
        v_q=rng.uniform(0.2, 3.0, individuals),
        v_eta=rng.uniform(0.2, 3.0, groups),
        agent=agent,
        a_tilde_i=float(A[agent] + rng.uniform(0.5, MAX_DELTA)),
    )


def random_correlated_scenario(rng: np.random.Generator, max_I: int = 6) -> CorrelatedScenario:
    individuals = int(rng.integers(1, max_I + 1))
    A = rng.normal(0.0, 1.0, individuals)
    agent = int(rng.integers(individuals))
    return CorrelatedScenario.create(
        random_spd(rng, individuals),
        A,
        agent,
        float(A[agent] + rng.uniform(-MAX_DELTA, MAX_DELTA)),
    )


def random_contact_scenario(
    rng: np.random.Generator, max_I: int = 6, homogeneous: bool = True
) -> ContactScenario:
    individuals = int(rng.integers(1, max_I + 1))
    A = rng.normal(0.0, 1.0, individuals)
    agent = int(rng.integers(individuals))
    size = 1 if homogeneous else individuals
    return ContactScenario.create(
        c=rng.choice([-1.0, 1.0], individuals),
        v_q=rng.uniform(0.2, 3.0, size),
        v_a=rng.uniform(0.2, 3.0, size),
        v_eta=float(rng.uniform(0.2, 3.0)),
        A=A,
        Theta=float(rng.normal()),
        agent=agent,
        a_tilde_i=float(A[agent] + rng.uniform(-MAX_DELTA, MAX_DELTA)),
    )

