"""Utility modules shared by the laboratory packages."""

from .logger import LabLogger
from .errors import (
    ErrorContext,
    LabError,
    ValidationError,
    ConfigError,
    NumericError,
    QuadratureError,
    TheoremViolationError,
    OutputError,
)

__all__ = [
    'LabLogger',
    'ErrorContext',
    'LabError',
    'ValidationError',
    'ConfigError',
    'NumericError',
    'QuadratureError',
    'TheoremViolationError',
    'OutputError',
]
