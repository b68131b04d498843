"""Typer commands applying stored summaries to app code."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console

from analysis.client import TopLevelResult, apply_summaries
from pcs_core import PcsError, RunConfig
from ui.dot import inter_to_dot
from ui.formatters import apply_table, reports_table

from .common import (
    analysis_config,
    check_format,
    fail,
    load_program_and_store,
    report_diagnostics,
    write_text,
)

logger = logging.getLogger(__name__)


def register(app_root: typer.Typer) -> None:
    """Register the apply, paths and infeasible commands."""

    app_root.command("apply")(apply)
    app_root.command("paths")(paths)
    app_root.command("infeasible")(infeasible)


def result_to_json(result: TopLevelResult, *, with_paths: bool = True) -> dict[str, object]:
    low, average, high = result.impl_edge_summary()
    data: dict[str, object] = {
        "top": result.top.key,
        "callbacks": result.callbacks,
        "api_calls": result.api_calls,
        "impl_edges": {"min": low, "avg": average, "max": high},
        "longest_path": result.paths.longest,
        "longest_feasible_path": result.filtered.longest,
        "infeasible": [report.to_json() for report in result.reports],
        "diagnostics": [str(item) for item in result.graph.diagnostics],
    }
    if with_paths:
        data["paths"] = [list(sequence) for sequence in result.paths.sequences]
        data["feasible_paths"] = [list(sequence) for sequence in result.filtered.sequences]
    return data


def _dump(data: object) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def run_apply(
    run: RunConfig, store_path: Path, *, tops: Optional[list[str]] = None, infeasible: bool = False
) -> list[TopLevelResult]:
    program, store = load_program_and_store(run.inputs, store_path)
    results = apply_summaries(program, store, run.analysis, tops=tops, infeasible=infeasible)
    for result in results:
        report_diagnostics(result.graph.diagnostics)
    return results


def apply(
    inputs: list[Path] = typer.Argument(..., help="Framework and app .ir files"),
    store: Path = typer.Option(..., "--store", "-s", help="Summary store produced by summarize"),
    top: Optional[list[str]] = typer.Option(None, "--top", help="Analyze only this top-level method (repeatable)"),
    infeasible_paths: bool = typer.Option(False, "--infeasible", help="Report infeasible branch outcomes"),
    output_format: str = typer.Option("text", "--format", help="text, json or dot"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Output file, or directory for dot"),
    max_chain: Optional[int] = typer.Option(None, "--max-chain", help="Maximum nesting of spliced calls"),
    path_bound: Optional[int] = typer.Option(None, "--path-bound", help="Callback paths kept per method"),
    jobs: Optional[int] = typer.Option(None, "--jobs", help="Top-level methods analyzed in parallel"),
    config: Optional[Path] = typer.Option(None, "--config", help="Configuration ini file"),
) -> None:
    """Splice summaries into each top-level callback and report inter-callback statistics."""

    check_format(output_format)
    try:
        run = RunConfig(
            subcommand="apply",
            inputs=tuple(inputs),
            analysis=analysis_config(config, max_chain=max_chain, path_bound=path_bound, jobs=jobs),
            output=output,
            format=output_format,
        )
        results = run_apply(run, store, tops=top, infeasible=infeasible_paths)
        _emit(run, results, infeasible_paths)
    except PcsError as exc:
        fail(exc)


def _emit(run: RunConfig, results: list[TopLevelResult], infeasible: bool) -> None:
    if run.format == "json":
        write_text(_dump([result_to_json(item) for item in results]), run.output)
        return
    if run.format == "dot":
        if run.output is None:
            write_text("".join(inter_to_dot(item.graph) for item in results), None)
            return
        for item in results:
            write_text(inter_to_dot(item.graph), run.output / f"{item.top.qualified_name}.dot")
        return

    console = Console()
    console.print(apply_table(results))
    if infeasible:
        console.print(reports_table([report for item in results for report in item.reports]))


def paths(
    inputs: list[Path] = typer.Argument(..., help="Framework and app .ir files"),
    store: Path = typer.Option(..., "--store", "-s", help="Summary store produced by summarize"),
    top: Optional[list[str]] = typer.Option(None, "--top", help="Only this top-level method (repeatable)"),
    bound: Optional[int] = typer.Option(None, "--bound", help="Maximum number of sequences per method"),
    feasible: bool = typer.Option(False, "--feasible", help="Drop paths through infeasible branch outcomes"),
    config: Optional[Path] = typer.Option(None, "--config", help="Configuration ini file"),
) -> None:
    """Print callback sequences along the inter-callback graph of each top-level method."""

    try:
        run = RunConfig(subcommand="paths", inputs=tuple(inputs), analysis=analysis_config(config, path_bound=bound))
        for result in run_apply(run, store, tops=top, infeasible=feasible):
            found = result.filtered if feasible else result.paths
            typer.echo(f"# {result.top.key} (longest {found.longest})")
            for sequence in found.sequences:
                typer.echo(" -> ".join(sequence))
            if found.truncated:
                typer.secho(f"Path bound reached for {result.top.key}", fg=typer.colors.YELLOW, err=True)
    except PcsError as exc:
        fail(exc)


def infeasible(
    inputs: list[Path] = typer.Argument(..., help="Framework and app .ir files"),
    store: Path = typer.Option(..., "--store", "-s", help="Summary store produced by summarize"),
    top: Optional[list[str]] = typer.Option(None, "--top", help="Only this top-level method (repeatable)"),
    output_format: str = typer.Option("text", "--format", help="text or json"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Write reports to this file"),
    config: Optional[Path] = typer.Option(None, "--config", help="Configuration ini file"),
) -> None:
    """List branch outcomes inside spliced summaries that no execution can take."""

    check_format(output_format, ("text", "json"))
    try:
        run = RunConfig(subcommand="infeasible", inputs=tuple(inputs), analysis=analysis_config(config))
        reports = [report for item in run_apply(run, store, tops=top, infeasible=True) for report in item.reports]
        if output_format == "json":
            write_text(_dump([report.to_json() for report in reports]), output)
            return
        lines = [
            f"{report.call_site}\t{report.branch}\t{'true' if report.outcome else 'false'}\t{report.expression}\n"
            for report in reports
        ]
        write_text("".join(lines), output)
    except PcsError as exc:
        fail(exc)
