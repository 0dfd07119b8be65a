"""Exception types shared across the package."""

from __future__ import annotations

__all__ = ["MinCusumError", "ValidationError", "DomainError", "ConvergenceError"]


class MinCusumError(Exception):
    """Base class for all package errors."""


class ValidationError(MinCusumError):
    """Rejected input: bad flag value, malformed config, invalid parameter."""


class DomainError(ValidationError):
    """Mathematically out of domain (e.g. threshold too small for the series)."""


class ConvergenceError(MinCusumError):
    """A solver or series truncation failed to reach the requested tolerance.

    Carries optional diagnostics in ``details`` (dict) for error reporting.
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = dict(details or {})
