"""
Custom exceptions for T2T.
"""
from typing import Optional


class T2TError(Exception):
    """Base exception for all T2T errors."""
    pass


class ShapeError(T2TError):
    """Raised when tensor shapes are incompatible."""
    pass


class NumericalError(T2TError):
    """Raised when a computation produces NaN/Inf or leaves its domain."""
    pass


class GradientError(T2TError):
    """Raised when backward cannot be run."""
    pass


class CheckpointError(T2TError):
    """Raised when checkpoint files cannot be written or read."""
    pass


class DatasetError(T2TError):
    """Raised when a dataset file is malformed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class VocabError(T2TError):
    """Raised on vocabulary mismatches or out-of-range token ids."""
    pass


class ConfigError(T2TError):
    """Raised when configuration validation fails."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"invalid config field '{field}': {message}")


class MetricError(T2TError):
    """Raised when a metric cannot be computed."""
    pass


class LabError(T2TError):
    """Raised by the divergence lab."""
    pass
