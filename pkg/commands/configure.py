"""CLI helpers for managing pcs configuration files."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer
from rich.console import Console

from pcs_core import PcsError, resolve_config, resolve_config_path, save_config_to_ini
from ui.formatters import config_summary_table

from .common import fail

app = typer.Typer()

_TEMPLATE = """[pcs]
# Maximum length of a call chain from an API method to a callback call site.
# max_chain = 16
# Callers sampled per method while searching call chains.
# max_callers = 5
# Seed for caller sampling.
# seed = 0
# Access path length before a value counts as unresolved.
# access_path_limit = 5
# Disjunction terms kept per predicate.
# max_terms = 64
# Propagation steps per branch-correlation query.
# query_budget = 10000
# Callback sequences kept per top-level method.
# path_bound = 1000
# API methods or top-level methods analyzed in parallel.
# jobs = 1
# Template table file replacing the built-in collection rows.
# templates = /path/to/templates.txt
"""


def register(app_root: typer.Typer) -> None:
    """Attach configuration-related subcommands to the CLI."""

    app.help = "Manage pcs configuration files"
    app_root.add_typer(app, name="config")


@app.command("init")
def init_config(
    path: Optional[Path] = typer.Option(None, "--path", help="Destination for the ini file"),
    overwrite: bool = typer.Option(False, "--overwrite", help="Overwrite when the file already exists"),
    resolved: bool = typer.Option(
        False, "--resolved", help="Write the values resolved from the existing file and PCS_* variables"
    ),
) -> None:
    """Create a commented template, or with --resolved the values currently in effect."""

    destination = (path or resolve_config_path()).expanduser()
    if destination.exists() and not overwrite:
        typer.secho(f"Configuration file already exists: {destination}", fg=typer.colors.YELLOW)
        raise typer.Exit(code=1)

    if resolved:
        try:
            save_config_to_ini(resolve_config(config_path=destination), destination)
        except PcsError as exc:
            fail(exc)
        typer.secho(f"Resolved configuration saved to {destination}", fg=typer.colors.GREEN)
        return

    destination.parent.mkdir(parents=True, exist_ok=True)
    destination.write_text(_TEMPLATE, encoding="ascii")
    typer.secho(f"Template saved to {destination}", fg=typer.colors.GREEN)


@app.command("show")
def show_config(
    path: Optional[Path] = typer.Option(None, "--path", help="Configuration ini file to read"),
) -> None:
    """Render the configuration resolved from the ini file and the environment."""

    try:
        config = resolve_config(config_path=path)
    except PcsError as exc:
        fail(exc)
    Console().print(config_summary_table(config))
