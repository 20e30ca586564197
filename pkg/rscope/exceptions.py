"""
Base exception classes for the regime-scope library.
"""
from typing import Any, Dict, Optional


class RscopeError(Exception):
    """Base exception for regime-scope errors."""

    exit_code: int = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class UsageError(RscopeError):
    """Raised when a caller passes invalid arguments or configuration."""

    exit_code = 2


class ArgumentError(UsageError, ValueError):
    """Raised when an argument value is outside its allowed range."""
    pass


class DimensionError(UsageError, ValueError):
    """Raised when array shapes or state dimensions do not agree."""
    pass


class ConfigError(UsageError):
    """Raised when an experiment configuration violates its schema."""
    pass


class FormatError(RscopeError):
    """Raised when a snapshot or library file cannot be decoded."""

    exit_code = 3


class LibraryVersionError(FormatError):
    """Raised when a persisted library was written by a newer major version."""
    pass


class NumericalError(RscopeError):
    """Raised when a numerical step cannot produce a meaningful result."""

    exit_code = 4


class RankError(NumericalError):
    """Raised when a matrix carries no usable subspace."""
    pass


class SingularityError(NumericalError):
    """Raised when a diagonal of singular values cannot be inverted."""
    pass


class DegenerateSignalError(NumericalError):
    """Raised when noise must be calibrated against a zero signal."""
    pass
