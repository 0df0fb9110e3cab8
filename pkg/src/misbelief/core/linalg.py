"""Dense linear algebra helpers shared by the solvers.

All inverses are taken through Cholesky factors; explicit inverses only
appear as columns solved against unit vectors.
"""

from typing import Any

import numpy as np
import numpy.typing as npt
from scipy import linalg

from misbelief.core.config import settings
from misbelief.core.errors import DimensionMismatch, IllConditioned, InvalidModel

FloatArray = npt.NDArray[np.float64]


def as_matrix(value: Any, name: str) -> FloatArray:
    """Coerce to a finite 2-D float array."""
    array = np.array(value, dtype=np.float64, copy=True)
    if array.ndim != 2:
        raise DimensionMismatch(f"{name} must be a 2-D matrix", name=name, shape=array.shape)
    if not np.all(np.isfinite(array)):
        raise InvalidModel(f"{name} has non-finite entries", name=name)
    return array


def as_vector(value: Any, name: str) -> FloatArray:
    """Coerce to a finite 1-D float array."""
    array = np.array(value, dtype=np.float64, copy=True).reshape(-1)
    if not np.all(np.isfinite(array)):
        raise InvalidModel(f"{name} has non-finite entries", name=name)
    return array


def frozen(array: FloatArray) -> FloatArray:
    """Mark an array read-only and return it."""
    array.setflags(write=False)
    return array


def check_symmetric(matrix: FloatArray, name: str, tol: float | None = None) -> None:
    """Raise InvalidModel unless ``matrix`` is square and symmetric within tolerance."""
    if matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatch(f"{name} must be square", name=name, shape=matrix.shape)
    scale = max(1.0, float(np.max(np.abs(matrix))))
    asymmetry = float(np.max(np.abs(matrix - matrix.T)))
    if asymmetry > (tol if tol is not None else settings.symmetry_tol) * scale:
        raise InvalidModel(
            f"{name} is not symmetric",
            name=name,
            invariant="symmetric",
            asymmetry=asymmetry,
        )


def check_positive_definite(matrix: FloatArray, name: str) -> None:
    """Raise InvalidModel unless ``matrix`` is symmetric positive definite.

    The smallest eigenvalue must exceed ``pd_tol`` times the largest one,
    with the largest floored at 1 so tiny well-scaled matrices pass.
    """
    check_symmetric(matrix, name)
    eigenvalues = linalg.eigvalsh((matrix + matrix.T) / 2.0)
    threshold = settings.pd_tol * max(1.0, float(eigenvalues[-1]))
    if eigenvalues[0] <= threshold:
        raise InvalidModel(
            f"{name} is not positive definite",
            name=name,
            invariant="positive_definite",
            min_eigenvalue=float(eigenvalues[0]),
            threshold=threshold,
        )


def check_full_column_rank(matrix: FloatArray, name: str) -> None:
    """Raise InvalidModel unless ``matrix`` (D×L, D ≥ L) has rank L."""
    rows, cols = matrix.shape
    if rows < cols:
        raise InvalidModel(
            f"{name} must have at least as many rows as columns",
            name=name,
            invariant="D >= L",
            shape=matrix.shape,
        )
    singular_values = linalg.svdvals(matrix)
    if singular_values[-1] <= settings.rank_tol * singular_values[0]:
        raise InvalidModel(
            f"{name} does not have full column rank",
            name=name,
            invariant="rank(M) = L",
            min_singular_value=float(singular_values[-1]),
            max_singular_value=float(singular_values[0]),
        )


def cholesky_lower(matrix: FloatArray, name: str = "matrix") -> FloatArray:
    """Lower Cholesky factor, raising InvalidModel instead of LinAlgError."""
    try:
        return linalg.cholesky(matrix, lower=True)
    except linalg.LinAlgError as e:
        raise InvalidModel(
            f"{name} is not positive definite", name=name, invariant="positive_definite"
        ) from e


def whiten(chol: FloatArray, matrix: FloatArray) -> FloatArray:
    """Return L⁻¹·matrix for a lower Cholesky factor L."""
    return linalg.solve_triangular(chol, matrix, lower=True)


def log_det_from_cholesky(chol: FloatArray) -> float:
    """log det(LLᵀ) from the diagonal of L."""
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def gram_inverse(design: FloatArray, covariance: FloatArray) -> FloatArray:
    """Return (MᵀΣ⁻¹M)⁻¹ by Cholesky solves against unit vectors.

    Raises:
        IllConditioned: If cond(MᵀΣ⁻¹M) exceeds ``settings.max_condition``
        InvalidModel: If the computed inverse is not symmetric
    """
    whitened = whiten(cholesky_lower(covariance, "Sigma"), design)
    gram = whitened.T @ whitened
    condition = float(np.linalg.cond(gram))
    if not np.isfinite(condition) or condition > settings.max_condition:
        raise IllConditioned(
            "M'Σ⁻¹M is too ill-conditioned",
            invariant="cond(M'Σ⁻¹M) <= max_condition",
            condition=condition,
            max_condition=settings.max_condition,
        )
    factor = linalg.cho_factor(gram, lower=True)
    inverse = linalg.cho_solve(factor, np.eye(gram.shape[0]))
    # The bias ratios read both [.]_ij and [.]_ji; they must coincide.
    check_symmetric(
        inverse,
        "(M'Σ⁻¹M)⁻¹",
        tol=max(settings.symmetry_tol, 100.0 * float(np.finfo(np.float64).eps) * condition),
    )
    return (inverse + inverse.T) / 2.0
