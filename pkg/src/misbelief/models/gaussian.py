"""Linear-Gaussian signal model r_t = M f + ε_t, ε_t ~ N(0, Σ)."""

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Any

from typing_extensions import Self

import numpy as np

from misbelief.core.config import settings
from misbelief.core.errors import DimensionMismatch, InvalidModel
from misbelief.core.linalg import (
    FloatArray,
    as_matrix,
    as_vector,
    check_full_column_rank,
    check_positive_definite,
    frozen,
)


class FundamentalsRole(str, Enum):
    """What a fundamentals vector stands for."""

    TRUE = "true"  # f
    BELIEVED = "believed"  # f̃
    BIAS = "bias"  # Δ = f̃ - f


@dataclass(frozen=True, eq=False)
class LinearGaussianModel:
    """Design matrix M (D×L) and error covariance Σ (D×D).

    Construct through ``LinearGaussianModel.create`` which validates the
    invariants: D ≥ L, rank(M) = L, Σ symmetric positive definite, and both
    dimensions within ``settings.max_dim``.
    """

    M: FloatArray
    Sigma: FloatArray

    @classmethod
    def create(cls, M: Any, Sigma: Any) -> Self:
        design = as_matrix(M, "M")
        covariance = as_matrix(Sigma, "Sigma")
        rows, cols = design.shape
        if covariance.shape != (rows, rows):
            raise DimensionMismatch(
                "Sigma must be D×D with D the number of rows of M",
                M_shape=design.shape,
                Sigma_shape=covariance.shape,
            )
        if max(rows, cols) > settings.max_dim:
            raise InvalidModel(
                "model exceeds the configured dimension cap",
                invariant="D, L <= max_dim",
                D=rows,
                L=cols,
                max_dim=settings.max_dim,
            )
        check_full_column_rank(design, "M")
        check_positive_definite(covariance, "Sigma")
        return cls(M=frozen(design), Sigma=frozen((covariance + covariance.T) / 2.0))

    @property
    def D(self) -> int:
        return int(self.M.shape[0])

    @property
    def L(self) -> int:
        return int(self.M.shape[1])

    def with_sigma(self, Sigma: Any) -> "LinearGaussianModel":
        """Same design matrix, different covariance."""
        return LinearGaussianModel.create(self.M, Sigma)

    def digest(self) -> str:
        """SHA-256 over the dimensions and raw bytes of M and Σ."""
        hasher = hashlib.sha256()
        hasher.update(np.asarray(self.M.shape, dtype=np.int64).tobytes())
        hasher.update(np.ascontiguousarray(self.M).tobytes())
        hasher.update(np.ascontiguousarray(self.Sigma).tobytes())
        return hasher.hexdigest()


@dataclass(frozen=True, eq=False)
class FundamentalsVector:
    """A length-L vector of fundamentals tagged with its role."""

    values: FloatArray
    role: FundamentalsRole = FundamentalsRole.TRUE

    @classmethod
    def create(cls, values: Any, role: FundamentalsRole = FundamentalsRole.TRUE) -> Self:
        return cls(values=frozen(as_vector(values, "fundamentals")), role=role)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def require_length(self, length: int) -> None:
        if len(self) != length:
            raise DimensionMismatch(
                "fundamentals length does not match the model",
                expected=length,
                actual=len(self),
            )


@dataclass(frozen=True, eq=False)
class SignalBatch:
    """T realisations of r_t together with how they were produced."""

    rows: FloatArray
    seed: int
    model_hash: str

    def __post_init__(self) -> None:
        if self.rows.ndim != 2 or self.rows.shape[0] < 1:
            raise DimensionMismatch("a signal batch needs at least one row", shape=self.rows.shape)
        if not np.all(np.isfinite(self.rows)):
            raise InvalidModel("signal batch has non-finite entries", invariant="finite rows")

    @property
    def T(self) -> int:
        return int(self.rows.shape[0])

    def head(self, t: int) -> "SignalBatch":
        """The first ``t`` rows as a batch."""
        return SignalBatch(rows=frozen(self.rows[:t].copy()), seed=self.seed, model_hash=self.model_hash)
