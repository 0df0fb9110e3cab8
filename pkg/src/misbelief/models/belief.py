"""Dogmatic constraints and the limit beliefs they lead to."""

from dataclasses import dataclass
from enum import Enum
from typing import Any

from typing_extensions import Self

import numpy as np

from misbelief.core.errors import InvalidConstraint, InvalidModel
from misbelief.core.linalg import FloatArray, as_matrix, check_positive_definite, frozen
from misbelief.models.gaussian import FundamentalsRole, FundamentalsVector, LinearGaussianModel


class PinMode(str, Enum):
    """Which fundamentals the agent holds with certainty."""

    PIN_ONE = "pin_one"
    PIN_ALL = "pin_all"


class CovarianceMode(str, Enum):
    """Whether the agent's covariance belief is fixed or learned."""

    FREE = "free"
    FIXED = "fixed"


class Case(str, Enum):
    """The three inference problems of the long-run belief theorem."""

    I = "I"  # noqa: E741 - pin one fundamental, covariance fixed
    II = "II"  # pin every fundamental, covariance learned
    III = "III"  # pin one fundamental, covariance learned


@dataclass(frozen=True, eq=False)
class DogmaticConstraint:
    """Support restriction of the agent's prior.

    PinOne + Fixed is Case I, PinAll + Free is Case II, PinOne + Free is
    Case III; PinAll + Fixed leaves nothing to learn and is rejected.
    """

    mode: PinMode
    covariance_mode: CovarianceMode
    pinned_index: int | None = None
    pinned_value: float | None = None
    pinned_vector: FundamentalsVector | None = None
    fixed_sigma: FloatArray | None = None

    def __post_init__(self) -> None:
        if self.mode == PinMode.PIN_ONE:
            if self.pinned_index is None or self.pinned_value is None:
                raise InvalidConstraint("PinOne needs pinned_index and pinned_value")
            if self.pinned_index < 0:
                raise InvalidConstraint("pinned_index must be non-negative", index=self.pinned_index)
            if not np.isfinite(self.pinned_value):
                raise InvalidConstraint("pinned_value must be finite")
        elif self.pinned_vector is None:
            raise InvalidConstraint("PinAll needs pinned_vector")
        if self.covariance_mode == CovarianceMode.FIXED:
            if self.fixed_sigma is None:
                raise InvalidConstraint("Fixed covariance mode needs fixed_sigma")
            if self.mode == PinMode.PIN_ALL:
                raise InvalidConstraint("PinAll with a fixed covariance leaves nothing to learn")
        elif self.fixed_sigma is not None:
            raise InvalidConstraint("fixed_sigma given with a free covariance mode")

    @classmethod
    def case1(cls, index: int, value: float, sigma_tilde: Any) -> Self:
        sigma = as_matrix(sigma_tilde, "Sigma_tilde")
        try:
            check_positive_definite(sigma, "Sigma_tilde")
        except InvalidModel as e:
            raise InvalidConstraint(e.message, **e.details) from e
        return cls(
            mode=PinMode.PIN_ONE,
            covariance_mode=CovarianceMode.FIXED,
            pinned_index=index,
            pinned_value=float(value),
            fixed_sigma=frozen((sigma + sigma.T) / 2.0),
        )

    @classmethod
    def case2(cls, pinned: Any) -> Self:
        vector = (
            pinned
            if isinstance(pinned, FundamentalsVector)
            else FundamentalsVector.create(pinned, FundamentalsRole.BELIEVED)
        )
        return cls(mode=PinMode.PIN_ALL, covariance_mode=CovarianceMode.FREE, pinned_vector=vector)

    @classmethod
    def case3(cls, index: int, value: float) -> Self:
        return cls(
            mode=PinMode.PIN_ONE,
            covariance_mode=CovarianceMode.FREE,
            pinned_index=index,
            pinned_value=float(value),
        )

    @property
    def case(self) -> Case:
        if self.mode == PinMode.PIN_ALL:
            return Case.II
        return Case.I if self.covariance_mode == CovarianceMode.FIXED else Case.III

    def require_case(self, expected: Case) -> None:
        if self.case != expected:
            raise InvalidConstraint(
                f"constraint is Case {self.case.value}, expected Case {expected.value}",
                actual=self.case.value,
                expected=expected.value,
            )

    def validate_for(self, model: LinearGaussianModel) -> None:
        """Check the constraint's dimensions against a model."""
        if self.mode == PinMode.PIN_ONE:
            assert self.pinned_index is not None
            if self.pinned_index >= model.L:
                raise InvalidConstraint(
                    "pinned_index out of range", index=self.pinned_index, L=model.L
                )
        else:
            assert self.pinned_vector is not None
            if len(self.pinned_vector) != model.L:
                raise InvalidConstraint(
                    "pinned_vector length does not match L",
                    length=len(self.pinned_vector),
                    L=model.L,
                )
        if self.fixed_sigma is not None and self.fixed_sigma.shape != (model.D, model.D):
            raise InvalidConstraint(
                "fixed Sigma_tilde must be D×D", shape=self.fixed_sigma.shape, D=model.D
            )

    def free_indices(self, L: int) -> list[int]:
        """Fundamentals the agent still learns about."""
        if self.mode == PinMode.PIN_ALL:
            return []
        return [j for j in range(L) if j != self.pinned_index]

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"case": self.case.value}
        if self.mode == PinMode.PIN_ONE:
            data |= {"pinned_index": self.pinned_index, "pinned_value": self.pinned_value}
        else:
            assert self.pinned_vector is not None
            data["pinned_vector"] = self.pinned_vector.values.tolist()
        if self.fixed_sigma is not None:
            data["fixed_sigma"] = self.fixed_sigma.tolist()
        return data


@dataclass(frozen=True, eq=False)
class LimitBelief:
    """The point (f̃, Σ̃) on which the agent's posterior concentrates."""

    f_tilde: FundamentalsVector
    sigma_tilde: FloatArray

    @classmethod
    def create(cls, f_tilde: Any, sigma_tilde: Any) -> Self:
        sigma = as_matrix(sigma_tilde, "sigma_tilde")
        check_positive_definite(sigma, "sigma_tilde")
        return cls(
            f_tilde=FundamentalsVector.create(f_tilde, FundamentalsRole.BELIEVED),
            sigma_tilde=frozen((sigma + sigma.T) / 2.0),
        )

    def bias(self, true_f: FundamentalsVector) -> FloatArray:
        """Δ = f̃ - f."""
        return np.asarray(self.f_tilde.values - true_f.values, dtype=np.float64)

    def distance(self, other: "LimitBelief") -> float:
        """Euclidean distance in f̃ plus Frobenius distance in Σ̃."""
        return float(
            np.linalg.norm(self.f_tilde.values - other.f_tilde.values)
            + np.linalg.norm(self.sigma_tilde - other.sigma_tilde)
        )


@dataclass(frozen=True, eq=False)
class RawScenario:
    """A bare inference problem: signal model, true fundamentals and the agent's constraint."""

    model: LinearGaussianModel
    true_f: FundamentalsVector
    constraint: DogmaticConstraint

    def __post_init__(self) -> None:
        self.true_f.require_length(self.model.L)
        self.constraint.validate_for(self.model)
