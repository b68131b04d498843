"""Option handling and error reporting shared by the subcommands."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, NoReturn, Optional, Sequence

import typer

from analysis.store import SummaryStore, load_store
from minifw.model import Program
from minifw.parser import load_program
from pcs_core import AnalysisConfig, PcsError, resolve_config, with_overrides
from pcs_core.errors import Diagnostic, IRParseError

logger = logging.getLogger(__name__)

FORMATS = ("text", "json", "dot")


def fail(exc: PcsError) -> NoReturn:
    """Print ``exc`` in red and leave with its exit code."""

    if isinstance(exc, IRParseError):
        for item in exc.diagnostics:
            typer.secho(str(item), fg=typer.colors.RED, err=True)
    else:
        typer.secho(exc.message, fg=typer.colors.RED, err=True)
    logger.error("Command failed", extra={"exit_code": exc.exit_code})
    raise typer.Exit(code=exc.exit_code)


def report_diagnostics(diagnostics: Iterable[Diagnostic]) -> None:
    for item in diagnostics:
        typer.secho(str(item), fg=typer.colors.YELLOW, err=True)


def analysis_config(config_path: Optional[Path] = None, **overrides: object) -> AnalysisConfig:
    """Defaults, then the ini file, then the environment, then command-line options."""

    return with_overrides(resolve_config(config_path=config_path), **overrides)


def check_format(value: str, allowed: Sequence[str] = FORMATS) -> str:
    if value not in allowed:
        raise typer.BadParameter(f"expected one of {', '.join(allowed)}", param_hint="--format")
    return value


def load_inputs(paths: Sequence[Path]) -> Program:
    if not paths:
        raise PcsError("No input files given")
    return load_program(list(paths))


def load_program_and_store(paths: Sequence[Path], store_path: Path) -> tuple[Program, SummaryStore]:
    return load_inputs(paths), load_store(store_path)


def write_text(text: str, output: Optional[Path]) -> None:
    """Write to ``output`` or stdout."""

    if output is None:
        typer.echo(text, nl=False)
        return
    try:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise PcsError(f"Cannot write {output}: {exc}") from exc
