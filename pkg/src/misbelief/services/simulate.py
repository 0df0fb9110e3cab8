"""Finite-sample learning on simulated signals.

Case I is simulated with the exact conjugate posterior (the agent's model
has a known covariance, so the posterior over the free fundamentals is
Gaussian). Cases II and III use the constrained maximum-likelihood estimate
as the finite-sample stand-in for the posterior's concentration point.
"""

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import structlog
from scipy import linalg, stats

from misbelief.core.config import settings
from misbelief.core.errors import DimensionMismatch, InvalidModel
from misbelief.core.linalg import FloatArray, cholesky_lower, frozen, whiten
from misbelief.models.belief import Case, DogmaticConstraint, LimitBelief
from misbelief.models.gaussian import (
    FundamentalsRole,
    FundamentalsVector,
    LinearGaussianModel,
    SignalBatch,
)
from misbelief.models.simulation import ConvergenceTrace, PosteriorState, TracePoint
from misbelief.services.gaussian import sample_signals
from misbelief.services.limit_solver import (
    kl_objective,
    minimise,
    parameterise,
    require_supported,
    solve,
    solve_case3,
)

logger = structlog.get_logger()


def initial_state(model: LinearGaussianModel, constraint: DogmaticConstraint) -> PosteriorState:
    """Diffuse prior over the free fundamentals of a Case I constraint."""
    require_supported(constraint, (Case.I,))
    constraint.validate_for(model)
    assert constraint.pinned_index is not None and constraint.pinned_value is not None
    return PosteriorState.prior(
        model.L, constraint.pinned_index, constraint.pinned_value, settings.prior_precision
    )


def _check_state(state: PosteriorState, model: LinearGaussianModel, constraint: DogmaticConstraint) -> None:
    require_supported(constraint, (Case.I,))
    constraint.validate_for(model)
    if state.L != model.L or state.pinned_index != constraint.pinned_index:
        raise DimensionMismatch(
            "posterior state does not match the model's free coordinates",
            state_L=state.L,
            L=model.L,
            state_pinned=state.pinned_index,
            pinned=constraint.pinned_index,
        )


def update_case1_batch(
    state: PosteriorState,
    model: LinearGaussianModel,
    constraint: DogmaticConstraint,
    rows: FloatArray,
) -> PosteriorState:
    """Fold a block of signal rows into the posterior in one conjugate step.

    With X the free columns of M, m the pinned column and Σ̃ the agent's
    covariance, each row r contributes XᵀΣ̃⁻¹X to the precision and
    XᵀΣ̃⁻¹(r − m·ã_i) to the information vector.
    """
    _check_state(state, model, constraint)
    block = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if block.shape[1] != model.D:
        raise DimensionMismatch("signal rows must have D columns", D=model.D, columns=block.shape[1])
    if block.shape[0] == 0:
        return state
    assert constraint.fixed_sigma is not None

    chol = cholesky_lower(constraint.fixed_sigma, "Sigma_tilde")
    free = list(state.free)
    pinned_column = model.M[:, state.pinned_index]
    whitened_design = whiten(chol, model.M[:, free])
    residual_sum = np.sum(block, axis=0) - block.shape[0] * pinned_column * state.pinned_value
    whitened_residual = whiten(chol, residual_sum)

    precision = state.precision + block.shape[0] * (whitened_design.T @ whitened_design)
    information = state.precision @ state.mean.values + whitened_design.T @ whitened_residual
    precision = (precision + precision.T) / 2.0
    mean = linalg.cho_solve(linalg.cho_factor(precision, lower=True), information)
    return PosteriorState(
        mean=FundamentalsVector.create(mean, FundamentalsRole.BELIEVED),
        precision=frozen(precision),
        t=state.t + block.shape[0],
        free=state.free,
        pinned_index=state.pinned_index,
        pinned_value=state.pinned_value,
    )


def update_case1(
    state: PosteriorState,
    model: LinearGaussianModel,
    constraint: DogmaticConstraint,
    signal_row: FloatArray,
) -> PosteriorState:
    """Bayes update of the Case I posterior with a single signal row."""
    row = np.asarray(signal_row, dtype=np.float64)
    if row.ndim != 1:
        raise DimensionMismatch("a signal row must be one-dimensional", shape=row.shape)
    return update_case1_batch(state, model, constraint, row.reshape(1, -1))


def _sample_moments(batch: SignalBatch, D: int) -> tuple[FloatArray, FloatArray]:
    if batch.rows.shape[1] != D:
        raise DimensionMismatch("batch rows do not have D columns", D=D, columns=batch.rows.shape[1])
    if batch.T <= D:
        raise InvalidModel(
            "constrained MLE needs more rows than signals", invariant="T > D", T=batch.T, D=D
        )
    mean = batch.rows.mean(axis=0)
    centred = batch.rows - mean
    covariance = centred.T @ centred / batch.T
    return mean, (covariance + covariance.T) / 2.0


def constrained_mle(
    model: LinearGaussianModel, constraint: DogmaticConstraint, batch: SignalBatch
) -> LimitBelief:
    """Maximise the batch log-likelihood over the constraint's support.

    The average log-likelihood depends on the batch only through its mean r̄
    and (biased) covariance S, and equals minus the KL divergence of
    N(r̄, S) from the candidate up to a constant, so the oracle's objective
    is reused with (r̄, S) in place of (M f, Σ). The quasi-Newton search
    starts from the GLS fit pushed through the long-run belief formulas.

    Raises:
        InvalidConstraint: For a Case I constraint
        NonConvergence: If the search does not reach the gradient tolerance
    """
    require_supported(constraint, (Case.II, Case.III))
    constraint.validate_for(model)
    sample_mean, sample_cov = _sample_moments(batch, model.D)
    sample_model = model.with_sigma(sample_cov)

    chol = cholesky_lower(sample_cov, "sample covariance")
    whitened = whiten(chol, model.M)
    gls, *_ = np.linalg.lstsq(whitened, whiten(chol, sample_mean), rcond=None)
    fitted = FundamentalsVector.create(gls)

    if constraint.case == Case.III:
        start = solve_case3(sample_model, fitted, constraint)
        f_start = start.f_tilde.values
    else:
        assert constraint.pinned_vector is not None
        f_start = constraint.pinned_vector.values
    gap = sample_mean - model.M @ f_start
    sigma_start = sample_cov + np.outer(gap, gap)

    param = parameterise(model, fitted, constraint)
    objective = kl_objective(model, sample_mean, sample_cov, param)
    best = minimise(param, objective, [param.pack(f_start, sigma_start)])
    f_hat, chol_hat = param.unpack(best.x)
    return LimitBelief.create(f_hat, chol_hat @ chol_hat.T)


def _validate_checkpoints(t_max: int, checkpoints: Sequence[int]) -> list[int]:
    steps = [int(t) for t in checkpoints]
    if not steps:
        raise InvalidModel("at least one checkpoint is required")
    if steps[0] < 1 or any(b <= a for a, b in zip(steps, steps[1:], strict=False)):
        raise InvalidModel("checkpoints must be positive and strictly increasing", checkpoints=steps)
    if t_max < steps[-1]:
        raise InvalidModel("t_max must cover the last checkpoint", t_max=t_max, last=steps[-1])
    return steps


def convergence_trace(
    model: LinearGaussianModel,
    true_f: FundamentalsVector,
    constraint: DogmaticConstraint,
    t_max: int,
    checkpoints: Sequence[int],
    seed: int,
) -> ConvergenceTrace:
    """Learn from one seeded sample path and record the distance to the long-run belief.

    Args:
        model: True signal model
        true_f: True fundamentals
        constraint: Agent's dogmatic constraint (any case)
        t_max: Number of signals to draw
        checkpoints: Strictly increasing observation counts to record
        seed: Seed of the sample path

    Returns:
        ConvergenceTrace, identical for identical arguments
    """
    steps = _validate_checkpoints(t_max, checkpoints)
    limit = solve(model, true_f, constraint)
    batch = sample_signals(model, true_f, t_max, seed)
    points: list[TracePoint] = []

    if constraint.case == Case.I:
        assert constraint.fixed_sigma is not None
        state = initial_state(model, constraint)
        for t in steps:
            state = update_case1_batch(state, model, constraint, batch.rows[state.t : t])
            belief = LimitBelief.create(state.full_mean().values, constraint.fixed_sigma)
            points.append(TracePoint(t=t, belief=belief, distance=belief.distance(limit)))
    else:
        for t in steps:
            belief = constrained_mle(model, constraint, batch.head(t))
            points.append(TracePoint(t=t, belief=belief, distance=belief.distance(limit)))

    logger.debug(
        "Convergence trace recorded",
        case=constraint.case.value,
        seed=seed,
        checkpoints=len(points),
        final_distance=points[-1].distance,
    )
    return ConvergenceTrace(checkpoints=tuple(points), seed=seed, limit=limit)


def replicate_traces(
    model: LinearGaussianModel,
    true_f: FundamentalsVector,
    constraint: DogmaticConstraint,
    t_max: int,
    checkpoints: Sequence[int],
    seeds: Sequence[int],
) -> list[ConvergenceTrace]:
    """Run ``convergence_trace`` for every seed concurrently, returned in seed order."""
    workers = min(settings.resolved_threads(), max(1, len(seeds)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(convergence_trace, model, true_f, constraint, t_max, checkpoints, seed)
            for seed in seeds
        ]
        return [future.result() for future in futures]


def decay_slope(traces: Sequence[ConvergenceTrace]) -> float:
    """Slope of log(mean distance) against log t across replicated traces.

    Noise-driven convergence decays like t^(-1/2), i.e. a slope near −0.5.
    """
    if not traces:
        raise InvalidModel("no traces to fit")
    steps = traces[0].steps
    if len(steps) < 2 or any(trace.steps != steps for trace in traces):
        raise InvalidModel("traces need at least two shared checkpoints")
    mean_distance = np.mean([trace.distances for trace in traces], axis=0)
    fit = stats.linregress(np.log(steps), np.log(mean_distance))
    return float(fit.slope)
