"""Core helpers used by the pcs CLI and analysis packages."""

from .config import (
    AnalysisConfig,
    RunConfig,
    resolve_config,
    resolve_config_path,
    resolve_default_config_path,
    save_config_to_ini,
    with_overrides,
)
from .errors import (
    ConfigError,
    Diagnostic,
    InterpreterError,
    InvariantViolation,
    IRParseError,
    PcsError,
    PreconditionError,
    Severity,
    StoreFormatError,
)

__version__ = "0.1.0"
TOOL_NAME = "pcs-summarizer"

__all__ = [
    "AnalysisConfig",
    "RunConfig",
    "resolve_config",
    "resolve_config_path",
    "resolve_default_config_path",
    "save_config_to_ini",
    "with_overrides",
    "ConfigError",
    "Diagnostic",
    "InterpreterError",
    "InvariantViolation",
    "IRParseError",
    "PcsError",
    "PreconditionError",
    "Severity",
    "StoreFormatError",
    "TOOL_NAME",
    "__version__",
]
