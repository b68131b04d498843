"""Subpackage with CLI command implementations for pcs."""

from __future__ import annotations

import typer

from . import apply, compare, configure, dot, summarize


def register(app: typer.Typer) -> None:
    """Register all CLI commands on the provided Typer application."""

    summarize.register(app)
    apply.register(app)
    dot.register(app)
    compare.register(app)
    configure.register(app)
