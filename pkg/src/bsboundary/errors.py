"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class BoundaryError(Exception):
    """Base class for all errors raised by :mod:`bsboundary`."""


class PrimeMismatchError(BoundaryError, ValueError):
    """Operands live over different primes."""


class PrecisionError(BoundaryError, ArithmeticError):
    """A truncated p-adic value does not carry enough certified digits."""


# Alias used by the projection code, where the failure has a specific meaning.
InsufficientPrecision = PrecisionError


class DegenerateBoundary(BoundaryError, ArithmeticError):
    """``b + alpha`` sits within the rejection tolerance of an integer."""


class InvalidMeasure(BoundaryError, ValueError):
    """Step measure weights or atoms violate the measure invariants."""


class NotContracting(BoundaryError, ValueError):
    """The drift sign required by a sampler does not hold."""


class MaxStepsExceeded(BoundaryError, RuntimeError):
    """A sampler failed to certify its output within the step budget."""


class ConfigError(BoundaryError, ValueError):
    """Malformed configuration file or command line."""
