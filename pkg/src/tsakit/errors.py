"""Exception types shared across the toolkit.

Everything raised on purpose derives from TsaError so callers (and the
command line driver) can tell modeling errors apart from genuine bugs.
"""

from __future__ import annotations


class TsaError(Exception):
    """Base class for all toolkit errors."""


class InputError(TsaError):
    """Malformed user input: bad config keys, bad CSV rows, bad arguments."""


class ConfigError(InputError):
    """Configuration file problem (unknown section or key, bad value)."""


class CsvFormatError(InputError):
    """CSV ingestion problem. Carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(TsaError):
    """Kinematic quantity requested outside the model's admissible domain."""


class CoilCapacityError(DomainError):
    """Twist angle beyond the point where coils consume the whole bundle.

    theta_max is the largest admissible twist (rad) so callers can clamp.
    """

    def __init__(self, message: str, theta_max: float):
        self.theta_max = theta_max
        super().__init__(message)


class KinkError(DomainError):
    """Derivative requested exactly at the phase transition without a side."""


class ParameterError(TsaError):
    """Model parameters violate their invariants for the given string."""


class TrainingGateError(TsaError):
    """Overtwist requested on a stiff string that has not been trained."""


class TriangleRangeError(DomainError):
    """String length outside the linkage triangle inequality.

    Carries the admissible closed interval (lo, hi) in mm.
    """

    def __init__(self, message: str, lo: float, hi: float):
        self.lo = lo
        self.hi = hi
        super().__init__(message)


class SingularConfigurationError(DomainError):
    """Linkage pose where the string line passes through the joint."""


class NonInvertibleError(TsaError):
    """Sensing map cannot be inverted (degenerate sensitivity)."""


class UnderdeterminedError(TsaError):
    """Not enough independent data to identify the requested model."""


class GridCapError(TsaError):
    """Requested oracle grid exceeds the evaluation cap."""


class ConvergenceError(TsaError):
    """Optimizer failed to converge within its iteration budget."""
