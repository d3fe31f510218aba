"""Votesurprise errors.

Validation problems raise an `InvalidInput` before any work starts,
problems that only show up while running raise a `RuntimeDiagnostic`.
"""


class VoteSurpriseException(Exception):
    """Base exception for votesurprise."""


class InvalidInput(VoteSurpriseException, ValueError):
    """Raised when an input violates an operation's preconditions."""


class DimensionMismatch(InvalidInput):
    """Raised when matrices, vectors or class systems do not line up."""


class PreconditionFailed(InvalidInput):
    """Raised when a documented precondition (MEE, n bound, ...) does not hold."""


class DegenerateConfig(InvalidInput):
    """Raised when a configuration leads to a zero or negative variance."""


class MalformedInput(InvalidInput):
    """Raised when input files contain too many malformed rows."""

    def __init__(self, message: str, row_errors: list[str] | None = None) -> None:
        """Initialize with the row-level error list."""
        super().__init__(message)
        self.row_errors = row_errors or []


class RuntimeDiagnostic(VoteSurpriseException):
    """Raised when a valid run cannot produce a meaningful result."""


class ConditioningStarved(RuntimeDiagnostic):
    """Raised when no trial produced the designated true winner."""

    def __init__(self, message: str, trials: int, discarded: int) -> None:
        """Initialize with the trial budget and the number of discarded trials."""
        super().__init__(message)
        self.trials = trials
        self.discarded = discarded


class SizingError(RuntimeDiagnostic):
    """Raised when a sweep would exceed the memory bound."""

    def __init__(self, message: str, suggested_sample: int) -> None:
        """Initialize with a sample size that fits."""
        super().__init__(message)
        self.suggested_sample = suggested_sample


EXIT_OK = 0
EXIT_CODES: dict[type[VoteSurpriseException], int] = {
    InvalidInput: 2,
    RuntimeDiagnostic: 3,
}


def exit_code_for(exc: BaseException) -> int:
    """Return the CLI exit code for an exception (1 when not ours)."""
    for cls, code in EXIT_CODES.items():
        if isinstance(exc, cls):
            return code
    return 1
