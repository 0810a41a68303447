"""Typed errors shared across the package.

Every failure mode raises a subclass of HidimT2Error so callers (and the CLI)
can separate our semantic errors from genuine bugs.
"""


class HidimT2Error(Exception):
    """Base class for all errors raised by this package."""


class DomainError(HidimT2Error, ValueError):
    """An input lies outside the mathematical domain of the operation."""


class SingularBranchError(DomainError):
    """A transform value landed on a pole of the inverse map."""


class SingularKernelError(DomainError):
    """The covariance kernel denominator vanished at the requested pair."""


class RankDeficiencyError(DomainError):
    """The sample covariance cannot have full rank for this data shape."""


class EvaluationError(HidimT2Error, ValueError):
    """A user-supplied function returned a non-finite value where one is required."""


class ConvergenceError(HidimT2Error, RuntimeError):
    """Quadrature did not reach the requested tolerance within its budget."""

    def __init__(self, message: str, best_estimate: float | None = None):
        super().__init__(message)
        self.best_estimate = best_estimate


class SingularMatrixError(HidimT2Error, ValueError):
    """A matrix is numerically singular; carries the offending eigenvalue if known."""

    def __init__(self, message: str, eigenvalue: float | None = None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class DegenerateDataError(HidimT2Error, ValueError):
    """Data collapsed to a constant during preprocessing."""


class ExperimentError(HidimT2Error, RuntimeError):
    """Too large a share of Monte Carlo replicates failed."""


class CsvFormatError(HidimT2Error, ValueError):
    """Delimited input does not parse as a finite numeric matrix."""
