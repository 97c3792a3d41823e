"""Exception types shared across the package."""

from __future__ import annotations


class GeneralPositionError(ValueError):
    """A subset of anchor/mixing vectors is linearly (or affinely) dependent.

    Carries the offending index subset so callers can report which vectors
    break the assumption.
    """

    def __init__(self, message: str, subset=None):
        super().__init__(message)
        self.subset = tuple(subset) if subset is not None else None


class NonUniqueSolutionError(ArithmeticError):
    """The linear system does not determine the unknowns uniquely.

    This is a legitimate mathematical outcome (too few effective equations),
    not an input validation failure; the CLI maps it to exit code 2.
    """

    def __init__(self, message: str, rank=None, required=None, report=None):
        super().__init__(message)
        self.rank = rank
        self.required = required
        self.report = report


class ConfigurationError(ValueError):
    """A configuration value is malformed or inconsistent."""


class UnsupportedBasisError(ValueError):
    """The requested operation needs metadata this basis kind does not carry."""


class ResourceLimitError(ValueError):
    """Refusing a factorial-cost enumeration above the configured cap."""
