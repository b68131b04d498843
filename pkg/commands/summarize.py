"""Typer command generating predicate callback summaries for a framework."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console

from analysis.pipeline import TSV_HEADER, summarize_program
from analysis.store import save_store
from pcs_core import PcsError, RunConfig
from ui.formatters import stats_table

from .common import analysis_config, fail, load_inputs, report_diagnostics

logger = logging.getLogger(__name__)


def register(app_root: typer.Typer) -> None:
    """Register this module's command with the Typer application."""

    app_root.command("summarize")(summarize)


def summarize(
    inputs: list[Path] = typer.Argument(..., help="Framework .ir files"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Summary store to write"),
    api: Optional[list[str]] = typer.Option(None, "--api", help="Summarize only this API method (repeatable)"),
    max_chain: Optional[int] = typer.Option(None, "--max-chain", help="Maximum call chain length"),
    max_callers: Optional[int] = typer.Option(None, "--max-callers", help="Callers sampled per method"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for caller sampling"),
    jobs: Optional[int] = typer.Option(None, "--jobs", help="API methods summarized in parallel"),
    templates: Optional[Path] = typer.Option(None, "--templates", help="Template table file"),
    config: Optional[Path] = typer.Option(None, "--config", help="Configuration ini file"),
) -> None:
    """Summarize every API method and print one TSV stats line per method."""

    try:
        run = RunConfig(
            subcommand="summarize",
            inputs=tuple(inputs),
            analysis=analysis_config(
                config,
                max_chain=max_chain,
                max_callers=max_callers,
                seed=seed,
                jobs=jobs,
                templates=str(templates) if templates else None,
            ),
            output=output,
        )
        run_summarize(run, apis=api or None)
    except PcsError as exc:
        fail(exc)


def run_summarize(run: RunConfig, *, apis: Optional[list[str]] = None) -> int:
    program = load_inputs(run.inputs)
    result = summarize_program(program, run.analysis, apis=apis)
    report_diagnostics(result.diagnostics)

    typer.echo(TSV_HEADER)
    for item in result.stats:
        typer.echo(item.tsv())
    Console(stderr=True).print(stats_table(result.stats))

    if run.output is not None:
        save_store(result.store, run.output)
        typer.secho(f"Summary store saved to {run.output}", fg=typer.colors.GREEN, err=True)
    logger.info("Summarize finished", extra={"summaries": len(result.store.summaries)})
    return 0
