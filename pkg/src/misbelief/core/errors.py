"""Exception hierarchy and exit-code classification.

Every failure the library raises derives from ``MisbeliefError`` and carries
a ``details`` dict suitable for structlog context. The CLI turns exceptions
into a stable exit-code contract via ``classify``:

    0  success
    1  verification failure (a cross-check did not hold)
    2  scenario file could not be parsed or validated
    3  invariant violation (e.g. Σ not positive definite)
    4  numerical optimisation did not converge
"""

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Any


class ExitCode(IntEnum):
    """Process exit codes of the CLI."""

    OK = 0
    VERIFICATION_FAILED = 1
    PARSE_ERROR = 2
    INVARIANT_VIOLATION = 3
    NONCONVERGENCE = 4


class ErrorType(str, Enum):
    """Categories of library failures."""

    INVALID_MODEL = "invalid_model"
    ILL_CONDITIONED = "ill_conditioned"
    DIMENSION_MISMATCH = "dimension_mismatch"
    INVALID_CONSTRAINT = "invalid_constraint"
    INVALID_SCENARIO = "invalid_scenario"
    MISMATCHED_SOCIETIES = "mismatched_societies"
    NOT_APPLICABLE = "not_applicable"
    NON_CONVERGENCE = "non_convergence"
    UNKNOWN_PARAMETER = "unknown_parameter"
    INVALID_GRID = "invalid_grid"
    PARSE_ERROR = "parse_error"
    INTERNAL_ERROR = "internal_error"


class MisbeliefError(Exception):
    """Base class for all library errors."""

    error_type: ErrorType = ErrorType.INTERNAL_ERROR
    exit_code: ExitCode = ExitCode.INVARIANT_VIOLATION

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details: dict[str, Any] = details


class InvalidModel(MisbeliefError):
    """A LinearGaussianModel invariant failed (rank, symmetry, positive definiteness)."""

    error_type = ErrorType.INVALID_MODEL


class IllConditioned(InvalidModel):
    """M'Σ⁻¹M is too ill-conditioned to produce trustworthy bias ratios."""

    error_type = ErrorType.ILL_CONDITIONED


class DimensionMismatch(MisbeliefError):
    """Array shapes do not agree with the model dimensions."""

    error_type = ErrorType.DIMENSION_MISMATCH


class InvalidConstraint(MisbeliefError):
    """The dogmatic constraint is malformed or used with the wrong solver."""

    error_type = ErrorType.INVALID_CONSTRAINT


class InvalidScenario(MisbeliefError):
    """A society or extension scenario violates its invariants."""

    error_type = ErrorType.INVALID_SCENARIO


class MismatchedSocieties(MisbeliefError):
    """Two scenarios compared for agreement describe different societies."""

    error_type = ErrorType.MISMATCHED_SOCIETIES


class NotApplicable(MisbeliefError):
    """A comparative-statics check's precondition does not hold for the scenario."""

    error_type = ErrorType.NOT_APPLICABLE


class NonConvergence(MisbeliefError):
    """The numerical optimiser failed to reach the gradient tolerance from every start."""

    error_type = ErrorType.NON_CONVERGENCE
    exit_code = ExitCode.NONCONVERGENCE


class UnknownParameter(MisbeliefError):
    """A sweep names a parameter that does not exist for the scenario kind."""

    error_type = ErrorType.UNKNOWN_PARAMETER
    exit_code = ExitCode.PARSE_ERROR


class InvalidGrid(MisbeliefError):
    """Sweep grid values are empty or violate positivity."""

    error_type = ErrorType.INVALID_GRID
    exit_code = ExitCode.PARSE_ERROR


class ScenarioParseError(MisbeliefError):
    """A scenario file is not valid JSON or does not match the schema."""

    error_type = ErrorType.PARSE_ERROR
    exit_code = ExitCode.PARSE_ERROR


@dataclass
class ClassifiedError:
    """Structured error with its exit code.

    Attributes:
        error_type: Categorised error type
        exit_code: Process exit code for the CLI
        message: Human-readable message
        details: Additional context
    """

    error_type: ErrorType
    exit_code: ExitCode
    message: str
    details: dict[str, Any] = field(default_factory=dict)

    def to_log_dict(self) -> dict[str, Any]:
        """Convert to dict for structured logging."""
        return {
            "error_type": self.error_type.value,
            "exit_code": int(self.exit_code),
            "message": self.message,
            **self.details,
        }


def classify(exception: BaseException) -> ClassifiedError:
    """Classify an exception into an exit code.

    Library errors keep their own type and code; anything else is an
    internal error reported as an invariant violation.

    Args:
        exception: The exception to classify

    Returns:
        ClassifiedError with the exit code the CLI should use
    """
    if isinstance(exception, MisbeliefError):
        return ClassifiedError(
            error_type=exception.error_type,
            exit_code=exception.exit_code,
            message=exception.message,
            details=dict(exception.details),
        )
    return ClassifiedError(
        error_type=ErrorType.INTERNAL_ERROR,
        exit_code=ExitCode.INVARIANT_VIOLATION,
        message=f"{type(exception).__name__}: {exception}",
    )
