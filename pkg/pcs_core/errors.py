"""Error hierarchy and diagnostics shared by the analysis pipeline and the CLI."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True, slots=True)
class Diagnostic:
    """A located message produced while parsing or analysing a program."""

    severity: Severity
    message: str
    source: Optional[str] = None
    line: int = 0
    column: int = 0

    def __str__(self) -> str:
        location = self.source or "<input>"
        if self.line:
            location = f"{location}:{self.line}:{self.column}"
        return f"{location}: {self.severity.value}: {self.message}"


def error(message: str, *, source: Optional[str] = None, line: int = 0, column: int = 0) -> Diagnostic:
    return Diagnostic(Severity.ERROR, message, source, line, column)


def warning(message: str, *, source: Optional[str] = None, line: int = 0, column: int = 0) -> Diagnostic:
    return Diagnostic(Severity.WARNING, message, source, line, column)


class PcsError(Exception):
    """Base class for every failure surfaced to the CLI."""

    default_exit_code = 1

    def __init__(self, message: str, *, exit_code: int | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.exit_code = self.default_exit_code if exit_code is None else exit_code


class IRParseError(PcsError):
    """Raised when IR text fails to parse or validate."""

    def __init__(self, diagnostics: Iterable[Diagnostic]) -> None:
        self.diagnostics = tuple(diagnostics)
        first = str(self.diagnostics[0]) if self.diagnostics else "invalid program"
        extra = len(self.diagnostics) - 1
        message = first if extra <= 0 else f"{first} (and {extra} more)"
        super().__init__(message)


class StoreFormatError(PcsError):
    """Raised when a summary store file cannot be decoded."""


class ConfigError(PcsError):
    """Raised when configuration values fail validation."""


class PreconditionError(PcsError):
    """Raised when an operation is invoked outside its precondition."""

    default_exit_code = 2


class InvariantViolation(PcsError):
    """Raised when an internal consistency check fails."""

    default_exit_code = 2


class InterpreterError(PcsError):
    """Raised by the fixture interpreter on unsupported or runaway executions."""

    default_exit_code = 2
