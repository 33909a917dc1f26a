"""Error types for the laboratory.

This module defines all custom exceptions used throughout the package,
providing a centralized location for error handling and classification.
Each error carries the process exit code the CLI reports for it.
"""

from typing import Optional, Dict, Any, List
from dataclasses import dataclass, field
from datetime import datetime


@dataclass
class ErrorContext:
    """Context information for errors."""
    component: str
    operation: str
    details: Dict[str, Any] = field(default_factory=dict)
    timestamp: datetime = field(default_factory=datetime.now)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'component': self.component,
            'operation': self.operation,
            'details': {key: repr(value) for key, value in self.details.items()},
        }


class LabError(Exception):
    """Base exception for all laboratory errors."""

    exit_code: int = 1

    def __init__(self, message: str, context: Optional[ErrorContext] = None):
        super().__init__(message)
        self.context = context
        self.timestamp = datetime.now()

    @property
    def user_message(self) -> str:
        """Returns a user-friendly error message."""
        return str(self)

    def to_record(self) -> Dict[str, Any]:
        """Serializable error record written by the CLI."""
        record = {
            'error': type(self).__name__,
            'message': str(self),
            'exit_code': self.exit_code,
        }
        if self.context is not None:
            record['context'] = self.context.to_dict()
        return record


class ValidationError(LabError, ValueError):
    """Raised when an input violates a module invariant or precondition."""

    exit_code = 2

    @property
    def user_message(self) -> str:
        return f"Invalid input: {str(self)}"


class ConfigError(ValidationError):
    """Raised when a run configuration cannot be parsed or validated."""

    def __init__(self, message: str, errors: Optional[List[str]] = None,
                 context: Optional[ErrorContext] = None):
        super().__init__(message, context)
        self.errors = list(errors) if errors else [message]

    @property
    def user_message(self) -> str:
        return "Configuration rejected:\n" + "\n".join(f"  - {e}" for e in self.errors)

    def to_record(self) -> Dict[str, Any]:
        record = super().to_record()
        record['errors'] = self.errors
        return record


class NumericError(LabError):
    """Raised when a numerical computation fails."""

    exit_code = 3

    @property
    def user_message(self) -> str:
        return f"Numerical failure: {str(self)}"


class QuadratureError(NumericError):
    """Raised when a quadrature does not converge."""

    def __init__(self, message: str, trace: Optional[List[Dict[str, float]]] = None,
                 context: Optional[ErrorContext] = None):
        super().__init__(message, context)
        self.trace = list(trace) if trace else []

    def to_record(self) -> Dict[str, Any]:
        record = super().to_record()
        record['trace'] = self.trace
        return record


class TheoremViolationError(LabError):
    """Raised when a proved inequality fails beyond its error margin."""

    exit_code = 4

    @property
    def user_message(self) -> str:
        return f"Theorem check violated (implementation bug): {str(self)}"


class OutputError(LabError, IOError):
    """Raised when writing reports or plots fails."""

    exit_code = 3

    @property
    def user_message(self) -> str:
        return f"Could not write output: {str(self)}"
