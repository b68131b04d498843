"""Typer command comparing a summary store against a ground-truth store."""

from __future__ import annotations

import json
from pathlib import Path

import typer
from rich.console import Console

from analysis.compare import compare_stores
from analysis.store import load_store
from pcs_core import PcsError
from ui.formatters import compare_table

from .common import check_format, fail, write_text


def register(app_root: typer.Typer) -> None:
    """Register this module's command with the Typer application."""

    app_root.command("compare")(compare)


def compare(
    store: Path = typer.Argument(..., help="Generated summary store"),
    truth: Path = typer.Argument(..., help="Ground-truth summary store"),
    output_format: str = typer.Option("text", "--format", help="text or json"),
) -> None:
    """Report matched, missed and additional summary nodes per node kind."""

    check_format(output_format, ("text", "json"))
    try:
        comparison = compare_stores(load_store(store), load_store(truth))
    except PcsError as exc:
        fail(exc)

    if output_format == "json":
        data = {
            kind.value: {
                "match": counts.match,
                "missed": counts.missed,
                "additional": counts.additional,
                "precision": round(counts.precision, 4),
                "recall": round(counts.recall, 4),
            }
            for kind, counts in comparison.totals().items()
        }
        data["missing_apis"] = comparison.missing_apis
        data["extra_apis"] = comparison.extra_apis
        write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", None)
        return

    Console().print(compare_table(comparison))
    for api in comparison.missing_apis:
        typer.secho(f"Missing summary for {api}", fg=typer.colors.YELLOW)
    for api in comparison.extra_apis:
        typer.secho(f"Summary not in ground truth: {api}", fg=typer.colors.YELLOW)
