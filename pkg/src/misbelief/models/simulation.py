"""Finite-sample learning state and convergence traces."""

from dataclasses import dataclass
from typing_extensions import Self

import numpy as np

from misbelief.core.errors import DimensionMismatch, InvalidModel
from misbelief.core.linalg import FloatArray, check_positive_definite, frozen
from misbelief.models.belief import LimitBelief
from misbelief.models.gaussian import FundamentalsRole, FundamentalsVector


@dataclass(frozen=True, eq=False)
class PosteriorState:
    """Gaussian posterior over the free fundamentals after ``t`` observations.

    The pinned fundamental is not part of the state; ``full_mean`` puts it
    back at its pinned value.
    """

    mean: FundamentalsVector
    precision: FloatArray
    t: int
    free: tuple[int, ...]
    pinned_index: int
    pinned_value: float

    def __post_init__(self) -> None:
        size = len(self.free)
        if len(self.mean) != size or self.precision.shape != (size, size):
            raise DimensionMismatch(
                "posterior state does not match the free coordinates",
                free=size,
                mean=len(self.mean),
                precision=self.precision.shape,
            )
        if self.t < 0:
            raise InvalidModel("observation count must be non-negative", t=self.t)
        if size:
            check_positive_definite(self.precision, "posterior precision")

    @classmethod
    def prior(cls, L: int, pinned_index: int, pinned_value: float, precision: float) -> Self:
        """Zero-mean prior with precision ``precision``·Id over the free coordinates."""
        free = tuple(j for j in range(L) if j != pinned_index)
        return cls(
            mean=FundamentalsVector.create(np.zeros(len(free)), FundamentalsRole.BELIEVED),
            precision=frozen(precision * np.eye(len(free))),
            t=0,
            free=free,
            pinned_index=pinned_index,
            pinned_value=float(pinned_value),
        )

    @property
    def L(self) -> int:
        return len(self.free) + 1

    def full_mean(self) -> FundamentalsVector:
        values = np.empty(self.L)
        values[list(self.free)] = self.mean.values
        values[self.pinned_index] = self.pinned_value
        return FundamentalsVector.create(values, FundamentalsRole.BELIEVED)

    def covariance(self) -> FloatArray:
        return np.asarray(np.linalg.inv(self.precision), dtype=np.float64)

    def spread(self) -> float:
        """√trace(precision⁻¹), the posterior's overall standard deviation."""
        return float(np.sqrt(np.trace(self.covariance())))


@dataclass(frozen=True, eq=False)
class TracePoint:
    """Belief snapshot at one checkpoint and its distance to the long-run belief."""

    t: int
    belief: LimitBelief
    distance: float


@dataclass(frozen=True, eq=False)
class ConvergenceTrace:
    """Beliefs recorded along one seeded sample path."""

    checkpoints: tuple[TracePoint, ...]
    seed: int
    limit: LimitBelief

    def __post_init__(self) -> None:
        steps = [point.t for point in self.checkpoints]
        if any(later <= earlier for earlier, later in zip(steps, steps[1:], strict=False)):
            raise InvalidModel("checkpoints must be strictly increasing", checkpoints=steps)

    @property
    def steps(self) -> list[int]:
        return [point.t for point in self.checkpoints]

    @property
    def distances(self) -> list[float]:
        return [point.distance for point in self.checkpoints]

    @property
    def final(self) -> TracePoint:
        return self.checkpoints[-1]

    def is_decreasing(self) -> bool:
        values = self.distances
        return all(later < earlier for earlier, later in zip(values, values[1:], strict=False))
