"""Typer command exporting graphs as Graphviz DOT."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer

from analysis.client import build_inter_callback_icfg
from analysis.graphs import build_cfg
from analysis.pipeline import select_apis, summarize_program
from analysis.store import load_store
from minifw.model import MethodDef, Program
from pcs_core import PcsError
from ui.dot import Exportable, export_dot, to_dot

from .common import analysis_config, fail, load_inputs, write_text

KINDS = ("pcs", "cfg", "icfg", "inter")


def register(app_root: typer.Typer) -> None:
    """Register this module's command with the Typer application."""

    app_root.command("dot")(dot)


def _find_method(program: Program, name: str) -> MethodDef:
    for method in program.methods():
        if name in (method.key, method.qualified_name):
            return method
    raise PcsError(f"Unknown method {name}")


def dot(
    method: str = typer.Argument(..., help="Method key or Class.name to export"),
    inputs: Optional[list[Path]] = typer.Argument(None, help=".ir files (not needed for --kind pcs)"),
    kind: str = typer.Option("pcs", "--kind", help="pcs, cfg, icfg or inter"),
    store: Optional[Path] = typer.Option(None, "--store", "-s", help="Summary store (pcs and inter)"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="DOT file to write"),
    config: Optional[Path] = typer.Option(None, "--config", help="Configuration ini file"),
) -> None:
    """Export a summary, a CFG, an API method's ICFG or an inter-callback graph."""

    if kind not in KINDS:
        raise typer.BadParameter(f"expected one of {', '.join(KINDS)}", param_hint="--kind")
    try:
        item = _select(method, inputs or [], kind, store, config)
        if output is None:
            write_text(to_dot(item), None)
        else:
            export_dot(item, output)
    except PcsError as exc:
        fail(exc)


def _select(name: str, inputs: list[Path], kind: str, store: Optional[Path], config: Optional[Path]) -> Exportable:
    if kind in ("pcs", "inter") and store is None:
        raise PcsError(f"--store is required for --kind {kind}")
    if kind == "pcs":
        summaries = load_store(store)
        for key, pcs in sorted(summaries.summaries.items()):
            if name in (key, key.split("(", 1)[0]):
                return pcs
        raise PcsError(f"No summary for {name} in {store}")

    program = load_inputs(inputs)
    settings = analysis_config(config)
    if kind == "cfg":
        return build_cfg(_find_method(program, name))
    if kind == "icfg":
        api = select_apis(program, [name])[0]
        return summarize_program(program, settings, apis=[api.key]).icfgs[api.key]
    return build_inter_callback_icfg(program, load_store(store), _find_method(program, name), settings)
