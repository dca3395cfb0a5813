"""Exception types raised by volpot."""

from __future__ import annotations


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class SingularSystemError(DomainError):
    """Linear system has no unique solution (e.g. repeated reflection rates)."""


class OutOfReachError(DomainError):
    """A reflected argument of an extension falls outside the base interval."""


class AccuracyNotMetError(RuntimeError):
    """A reference integrator could not reach the requested tolerance.

    The best estimate and the last error indicator are kept on the instance
    so callers can decide whether to use them anyway.
    """

    def __init__(self, message: str, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
