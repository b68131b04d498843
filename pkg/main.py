"""Entry point for the pcs CLI."""

from __future__ import annotations

import typer

from commands import register as register_commands
from pcs_core.log import configure_logging


def _build_app() -> typer.Typer:
    """Create the Typer application with every subcommand registered."""

    application = typer.Typer(help="Predicate callback summaries for MiniFW framework code")

    @application.callback()
    def root(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log debug details to stderr")) -> None:
        configure_logging(verbose)

    register_commands(application)
    return application


app = _build_app()


def main() -> None:
    """Execute the Typer application."""

    app()


if __name__ == "__main__":
    main()
