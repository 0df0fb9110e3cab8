"""Sampling, likelihood and KL divergence for linear-Gaussian signal models."""

import math

import numpy as np
import structlog

from misbelief.core.errors import DimensionMismatch, InvalidModel
from misbelief.core.linalg import (
    FloatArray,
    check_positive_definite,
    cholesky_lower,
    frozen,
    log_det_from_cholesky,
    whiten,
)
from misbelief.models.gaussian import FundamentalsVector, LinearGaussianModel, SignalBatch

logger = structlog.get_logger()

LOG_2PI = math.log(2.0 * math.pi)


def generator(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator, bit-reproducible for a given seed."""
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.Philox(seed))


def sample_signals(
    model: LinearGaussianModel, f: FundamentalsVector, t: int, seed: int
) -> SignalBatch:
    """Draw ``t`` i.i.d. rows of M f + ε with ε ~ N(0, Σ).

    Args:
        model: Signal model
        f: True fundamentals
        t: Number of rows (≥ 1)
        seed: Unsigned 64-bit seed

    Returns:
        SignalBatch, identical bit-for-bit for identical inputs
    """
    if t < 1:
        raise InvalidModel("sample count must be at least 1", t=t)
    f.require_length(model.L)
    chol = cholesky_lower(model.Sigma, "Sigma")
    normals = generator(seed).standard_normal((t, model.D))
    rows = normals @ chol.T + model.M @ f.values
    logger.debug("Sampled signals", T=t, D=model.D, seed=seed)
    return SignalBatch(rows=frozen(rows), seed=seed, model_hash=model.digest())


def _require_same_design(true_model: LinearGaussianModel, cand_model: LinearGaussianModel) -> None:
    if true_model.M.shape != cand_model.M.shape:
        raise DimensionMismatch(
            "models have different dimensions",
            true_shape=true_model.M.shape,
            candidate_shape=cand_model.M.shape,
        )
    if not np.array_equal(true_model.M, cand_model.M):
        raise DimensionMismatch("models must share the design matrix M")


def kl_from_cholesky(
    Sigma: FloatArray, mean_gap: FloatArray, chol_hat: FloatArray, log_det_sigma: float
) -> float:
    """½(tr(Σ̂⁻¹Σ) + gᵀΣ̂⁻¹g − D + log det Σ̂ − log det Σ) with Σ̂ = chol_hat·chol_hatᵀ.

    ``mean_gap`` is g = M(f̂ − f). Used directly by the numeric oracle, which
    parameterises Σ̂ by its Cholesky factor.
    """
    dim = Sigma.shape[0]
    # tr(Σ̂⁻¹Σ) = tr(L⁻¹ Σ L⁻ᵀ)
    whitened_sigma = whiten(chol_hat, Sigma)
    trace_term = float(np.trace(whiten(chol_hat, whitened_sigma.T)))
    whitened_gap = whiten(chol_hat, mean_gap)
    quad_term = float(whitened_gap @ whitened_gap)
    return 0.5 * (
        trace_term + quad_term - dim + log_det_from_cholesky(chol_hat) - log_det_sigma
    )


def kl_divergence(
    true_model: tuple[FundamentalsVector, LinearGaussianModel],
    cand: tuple[FundamentalsVector, LinearGaussianModel],
) -> float:
    """KL divergence of the candidate's signal distribution from the truth.

    D_KL(N(Mf, Σ) ‖ N(Mf̂, Σ̂)) =
        ½( tr(Σ̂⁻¹Σ) + (MΔ)ᵀΣ̂⁻¹(MΔ) − D + log(det Σ̂ / det Σ) ),  Δ = f̂ − f

    Raises:
        DimensionMismatch: If the models differ in M or dimensions
        InvalidModel: If either covariance is not positive definite
    """
    f, model = true_model
    f_hat, cand_model = cand
    _require_same_design(model, cand_model)
    f.require_length(model.L)
    f_hat.require_length(model.L)
    check_positive_definite(cand_model.Sigma, "Sigma_hat")

    mean_gap = model.M @ (f_hat.values - f.values)
    chol_hat = cholesky_lower(cand_model.Sigma, "Sigma_hat")
    log_det_sigma = log_det_from_cholesky(cholesky_lower(model.Sigma, "Sigma"))
    value = kl_from_cholesky(model.Sigma, mean_gap, chol_hat, log_det_sigma)
    # Round-off can leave -1e-16 at the true parameters.
    return max(value, 0.0)


def log_likelihood(model: LinearGaussianModel, f: FundamentalsVector, batch: SignalBatch) -> float:
    """Sum over rows of log N(r_z; M f, Σ).

    Uses the standard multivariate density: Σ⁻¹ in the quadratic form and
    (2π)^D in the normaliser.
    """
    f.require_length(model.L)
    if batch.rows.shape[1] != model.D:
        raise DimensionMismatch(
            "batch rows do not have D columns", D=model.D, columns=batch.rows.shape[1]
        )
    chol = cholesky_lower(model.Sigma, "Sigma")
    residuals = batch.rows - model.M @ f.values
    whitened = whiten(chol, residuals.T)
    quad = float(np.sum(whitened**2))
    per_row_const = model.D * LOG_2PI + log_det_from_cholesky(chol)
    return -0.5 * (batch.T * per_row_const + quad)
