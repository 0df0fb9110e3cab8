"""Long-run beliefs of a dogmatically misspecified learner.

The closed forms cover the three cases of the long-run belief theorem:

    Case I   (pin f_i, Σ̃ fixed):  f̃_j − f_j = [G̃⁻¹]_ij / [G̃⁻¹]_ii · (ã_i − f_i),
                                   G̃ = MᵀΣ̃⁻¹M
    Case II  (pin f̃, Σ̃ free):     Σ̃ = Σ + (MΔ)(MΔ)ᵀ
    Case III (pin f_i, Σ̃ free):   f̃ as in Case I with the TRUE Σ, Σ̃ as in Case II

``numeric_oracle`` minimises the KL divergence directly, with no knowledge
of the closed forms beyond using one of them as a starting point, and is the
independent cross-check for all three.
"""

from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import structlog
from scipy import optimize

from misbelief.core.config import settings
from misbelief.core.errors import InvalidConstraint, NonConvergence
from misbelief.core.linalg import (
    FloatArray,
    cholesky_lower,
    gram_inverse,
    log_det_from_cholesky,
)
from misbelief.models.belief import Case, DogmaticConstraint, LimitBelief
from misbelief.models.gaussian import FundamentalsVector, LinearGaussianModel
from misbelief.services.gaussian import generator, kl_from_cholesky

logger = structlog.get_logger()


def _pinned_bias_propagation(
    inverse_gram: FloatArray, index: int, pinned_gap: float
) -> FloatArray:
    """Δ_j = [G⁻¹]_ji / [G⁻¹]_ii · Δ_i for every j (Δ_i itself comes back unchanged)."""
    column = inverse_gram[:, index]
    ratios = column / column[index]
    delta: FloatArray = ratios * pinned_gap
    delta[index] = pinned_gap
    return delta


def _covariance_bias(model: LinearGaussianModel, delta: FloatArray) -> FloatArray:
    """(MΔ)(MΔ)ᵀ."""
    y = model.M @ delta
    return np.outer(y, y)


def _prepare(
    model: LinearGaussianModel, true_f: FundamentalsVector, constraint: DogmaticConstraint
) -> None:
    true_f.require_length(model.L)
    constraint.validate_for(model)


def solve_case1(
    model: LinearGaussianModel, true_f: FundamentalsVector, constraint: DogmaticConstraint
) -> LimitBelief:
    """Limit belief with one pinned fundamental and a fixed covariance belief Σ̃."""
    constraint.require_case(Case.I)
    _prepare(model, true_f, constraint)
    assert constraint.pinned_index is not None and constraint.pinned_value is not None
    assert constraint.fixed_sigma is not None

    index = constraint.pinned_index
    pinned_gap = constraint.pinned_value - float(true_f.values[index])
    inverse_gram = gram_inverse(model.M, constraint.fixed_sigma)
    delta = _pinned_bias_propagation(inverse_gram, index, pinned_gap)
    f_tilde = true_f.values + delta
    f_tilde[index] = constraint.pinned_value
    return LimitBelief.create(f_tilde, constraint.fixed_sigma)


def solve_case2(
    model: LinearGaussianModel, true_f: FundamentalsVector, constraint: DogmaticConstraint
) -> LimitBelief:
    """Limit belief with every fundamental pinned and the covariance learned."""
    constraint.require_case(Case.II)
    _prepare(model, true_f, constraint)
    assert constraint.pinned_vector is not None

    f_tilde = constraint.pinned_vector.values
    delta = f_tilde - true_f.values
    return LimitBelief.create(f_tilde, model.Sigma + _covariance_bias(model, delta))


def solve_case3(
    model: LinearGaussianModel, true_f: FundamentalsVector, constraint: DogmaticConstraint
) -> LimitBelief:
    """Limit belief with one pinned fundamental, the rest and the covariance learned."""
    constraint.require_case(Case.III)
    _prepare(model, true_f, constraint)
    assert constraint.pinned_index is not None and constraint.pinned_value is not None

    index = constraint.pinned_index
    pinned_gap = constraint.pinned_value - float(true_f.values[index])
    inverse_gram = gram_inverse(model.M, model.Sigma)
    delta = _pinned_bias_propagation(inverse_gram, index, pinned_gap)
    f_tilde = true_f.values + delta
    f_tilde[index] = constraint.pinned_value
    return LimitBelief.create(f_tilde, model.Sigma + _covariance_bias(model, delta))


def solve(
    model: LinearGaussianModel, true_f: FundamentalsVector, constraint: DogmaticConstraint
) -> LimitBelief:
    """Dispatch to the closed form matching the constraint's case."""
    solvers: dict[Case, Callable[..., LimitBelief]] = {
        Case.I: solve_case1,
        Case.II: solve_case2,
        Case.III: solve_case3,
    }
    return solvers[constraint.case](model, true_f, constraint)


# ---------------------------------------------------------------------------
# Numeric KL oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Parameterisation:
    """Maps an unconstrained vector to (f̂, Σ̂-Cholesky) on the constraint's support.

    Free fundamentals enter as-is; a free covariance enters as the lower
    Cholesky factor with log-parameterised (strictly positive) diagonal.
    """

    model: LinearGaussianModel
    constraint: DogmaticConstraint
    base_f: FloatArray
    free: tuple[int, ...]
    learn_sigma: bool

    @property
    def size(self) -> int:
        dim = self.model.D
        return len(self.free) + (dim * (dim + 1) // 2 if self.learn_sigma else 0)

    def unpack(self, x: FloatArray) -> tuple[FloatArray, FloatArray]:
        f_hat = self.base_f.copy()
        n_free = len(self.free)
        if n_free:
            f_hat[list(self.free)] = x[:n_free]
        if not self.learn_sigma:
            assert self.constraint.fixed_sigma is not None
            return f_hat, cholesky_lower(self.constraint.fixed_sigma, "Sigma_tilde")
        dim = self.model.D
        chol = np.zeros((dim, dim))
        rows, cols = np.tril_indices(dim)
        chol[rows, cols] = x[n_free:]
        diag = np.arange(dim)
        chol[diag, diag] = np.exp(chol[diag, diag])
        return f_hat, chol

    def pack(self, f_hat: FloatArray, sigma_hat: FloatArray) -> FloatArray:
        parts = [f_hat[list(self.free)]]
        if self.learn_sigma:
            chol = cholesky_lower(sigma_hat, "Sigma_hat").copy()
            diag = np.arange(self.model.D)
            chol[diag, diag] = np.log(chol[diag, diag])
            parts.append(chol[np.tril_indices(self.model.D)])
        return np.concatenate(parts)


def parameterise(
    model: LinearGaussianModel, true_f: FundamentalsVector, constraint: DogmaticConstraint
) -> Parameterisation:
    base = true_f.values.copy()
    if constraint.case == Case.II:
        assert constraint.pinned_vector is not None
        base = constraint.pinned_vector.values.copy()
    else:
        assert constraint.pinned_index is not None and constraint.pinned_value is not None
        base[constraint.pinned_index] = constraint.pinned_value
    return Parameterisation(
        model=model,
        constraint=constraint,
        base_f=base,
        free=tuple(constraint.free_indices(model.L)),
        learn_sigma=constraint.case != Case.I,
    )


def kl_objective(
    model: LinearGaussianModel,
    data_mean: FloatArray,
    data_cov: FloatArray,
    param: Parameterisation,
) -> Callable[[FloatArray], float]:
    """KL (up to data-only constants) of N(data_mean, data_cov) from the candidate at x.

    With ``data_mean = M f`` and ``data_cov = Σ`` this is the exact KL
    divergence; with sample moments it is the negative average
    log-likelihood shifted by a constant.
    """
    log_det_data = log_det_from_cholesky(cholesky_lower(data_cov, "data covariance"))

    def objective(x: FloatArray) -> float:
        f_hat, chol_hat = param.unpack(x)
        gap = model.M @ f_hat - data_mean
        return kl_from_cholesky(data_cov, gap, chol_hat, log_det_data)

    return objective


def central_difference_gradient(fun: Callable[[FloatArray], float], x: FloatArray) -> FloatArray:
    """Central finite-difference gradient with per-coordinate steps."""
    grad = np.zeros(x.size, dtype=np.float64)
    steps = np.cbrt(np.finfo(np.float64).eps) * (1.0 + np.abs(x))
    for k in range(x.size):
        dx = np.zeros_like(x)
        dx[k] = steps[k]
        grad[k] = (fun(x + dx) - fun(x - dx)) / (2.0 * steps[k])
    return grad


@dataclass(frozen=True)
class OracleRun:
    """Outcome of one oracle start."""

    start: int
    x: FloatArray
    objective: float
    grad_norm: float
    converged: bool


def _run_start(
    start: int,
    x0: FloatArray,
    objective: Callable[[FloatArray], float],
    max_iter: int,
    gtol: float,
) -> OracleRun:
    def gradient(x: FloatArray) -> FloatArray:
        return central_difference_gradient(objective, x)

    x = x0
    value = objective(x)
    grad_norm = float(np.linalg.norm(gradient(x)))
    # BFGS restarts reset the curvature estimate after precision-loss exits.
    for _ in range(4):
        if grad_norm <= gtol * (1.0 + abs(value)):
            break
        result = optimize.minimize(
            objective,
            x,
            method="BFGS",
            jac=gradient,
            options={"maxiter": max_iter, "gtol": gtol * 0.1},
        )
        x = np.asarray(result.x, dtype=np.float64)
        value = float(result.fun)
        grad_norm = float(np.linalg.norm(gradient(x)))
    return OracleRun(
        start=start,
        x=x,
        objective=value,
        grad_norm=grad_norm,
        converged=grad_norm <= gtol * (1.0 + abs(value)),
    )


def minimise(
    param: Parameterisation,
    objective: Callable[[FloatArray], float],
    starts: list[FloatArray],
    threads: int | None = None,
) -> OracleRun:
    max_iter = settings.oracle_max_iter
    gtol = settings.oracle_gtol
    workers = min(threads if threads is not None else settings.resolved_threads(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(
                pool.map(
                    lambda item: _run_start(item[0], item[1], objective, max_iter, gtol),
                    enumerate(starts),
                )
            )
    else:
        runs = [_run_start(k, x0, objective, max_iter, gtol) for k, x0 in enumerate(starts)]

    converged = [run for run in runs if run.converged]
    if not converged:
        raise NonConvergence(
            "numeric oracle did not reach the gradient tolerance from any start",
            starts=len(runs),
            best_grad_norm=min(run.grad_norm for run in runs),
            gtol=gtol,
        )
    # Lowest objective wins; ties go to the earliest start.
    best = min(converged, key=lambda run: (run.objective, run.start))
    logger.debug(
        "Oracle converged",
        parameters=param.size,
        starts=len(runs),
        converged=len(converged),
        objective=best.objective,
        grad_norm=best.grad_norm,
    )
    return best


def _random_starts(
    param: Parameterisation,
    center_f: FloatArray,
    center_sigma: FloatArray,
    count: int,
    seed: int,
) -> list[FloatArray]:
    rng = generator(seed)
    scale = settings.oracle_start_scale
    center = param.pack(center_f, center_sigma)
    n_free = len(param.free)
    starts = []
    for _ in range(count):
        x = center.copy()
        x[:n_free] += scale * rng.standard_normal(n_free) * (1.0 + np.abs(center[:n_free]))
        x[n_free:] += scale * rng.standard_normal(x.size - n_free)
        starts.append(x)
    return starts


def numeric_oracle(
    model: LinearGaussianModel,
    true_f: FundamentalsVector,
    constraint: DogmaticConstraint,
    seed: int | None = None,
    starts: int | None = None,
    threads: int | None = None,
) -> LimitBelief:
    """Minimise the KL divergence over the constraint's support numerically.

    Quasi-Newton (BFGS) with central-difference gradients from a multi-start:
    the first start is seeded at the closed form, the others are random
    perturbations of the true parameters. ``threads`` caps the pool the
    starts run on (default ``settings.resolved_threads()``); callers that
    already run inside a pool pass 1.

    Raises:
        NonConvergence: If no start reaches the gradient tolerance
    """
    _prepare(model, true_f, constraint)
    param = parameterise(model, true_f, constraint)
    total = starts if starts is not None else settings.oracle_starts

    if param.size == 0:
        # Case I with L = 1: the support is a single point.
        f_hat, chol = param.unpack(np.zeros(0))
        return LimitBelief.create(f_hat, chol @ chol.T)

    objective = kl_objective(model, model.M @ true_f.values, model.Sigma, param)
    closed_form = solve(model, true_f, constraint)
    initial = [param.pack(closed_form.f_tilde.values, closed_form.sigma_tilde)]
    initial += _random_starts(
        param,
        param.base_f if constraint.case == Case.II else true_f.values,
        model.Sigma,
        total - 1,
        seed if seed is not None else settings.oracle_seed,
    )
    best = minimise(param, objective, initial, threads)
    f_hat, chol = param.unpack(best.x)
    return LimitBelief.create(f_hat, chol @ chol.T)


def kl_at(
    model: LinearGaussianModel, true_f: FundamentalsVector, belief: LimitBelief
) -> float:
    """KL divergence of the belief's signal distribution from the truth."""
    chol_hat = cholesky_lower(belief.sigma_tilde, "sigma_tilde")
    gap = model.M @ (belief.f_tilde.values - true_f.values)
    log_det = log_det_from_cholesky(cholesky_lower(model.Sigma, "Sigma"))
    return kl_from_cholesky(model.Sigma, gap, chol_hat, log_det)


def projected_gradient_norm(
    model: LinearGaussianModel,
    true_f: FundamentalsVector,
    constraint: DogmaticConstraint,
    belief: LimitBelief,
) -> tuple[float, float]:
    """Finite-difference gradient norm of the KL objective restricted to the support.

    Returns:
        (gradient norm, objective value) at ``belief``
    """
    _prepare(model, true_f, constraint)
    param = parameterise(model, true_f, constraint)
    if param.size == 0:
        return 0.0, kl_at(model, true_f, belief)
    objective = kl_objective(model, model.M @ true_f.values, model.Sigma, param)
    x = param.pack(belief.f_tilde.values, belief.sigma_tilde)
    return float(np.linalg.norm(central_difference_gradient(objective, x))), objective(x)


def perturbation_margin(
    model: LinearGaussianModel,
    true_f: FundamentalsVector,
    constraint: DogmaticConstraint,
    belief: LimitBelief,
    count: int = 100,
    scale: float = 1e-2,
    seed: int = 0,
) -> float:
    """min over random support perturbations of KL(perturbed) − KL(belief).

    Non-negative when ``belief`` is a local minimiser.
    """
    _prepare(model, true_f, constraint)
    param = parameterise(model, true_f, constraint)
    if param.size == 0:
        return 0.0
    objective = kl_objective(model, model.M @ true_f.values, model.Sigma, param)
    x = param.pack(belief.f_tilde.values, belief.sigma_tilde)
    base = objective(x)
    rng = generator(seed)
    return min(objective(x + scale * rng.standard_normal(x.size)) - base for _ in range(count))


def require_supported(constraint: DogmaticConstraint, allowed: tuple[Case, ...]) -> None:
    if constraint.case not in allowed:
        raise InvalidConstraint(
            f"Case {constraint.case.value} is not supported here",
            allowed=[case.value for case in allowed],
        )
