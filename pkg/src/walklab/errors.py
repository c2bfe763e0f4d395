"""Exception types shared across the package."""


class WalkLabError(Exception):
    """Base class for package errors."""


class EmptyDomainError(WalkLabError):
    """The requested lattice approximation contains no vertices."""


class DomainTooLargeError(WalkLabError):
    """Dense assembly was requested above the configured size cap."""


class SolverError(WalkLabError):
    """A linear solve failed or its residual exceeded tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ParameterError(WalkLabError):
    """A parameter violated its documented range; the message names the constraint."""
