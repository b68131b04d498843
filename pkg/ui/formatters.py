"""Formatting helpers for rich-rendered CLI output."""

from __future__ import annotations

from statistics import mean
from typing import TYPE_CHECKING, Sequence

from rich import box
from rich.table import Table

if TYPE_CHECKING:  # pragma: no cover - type checking only
    from analysis.client import InfeasibleReport, TopLevelResult
    from analysis.compare import Comparison
    from analysis.pipeline import ApiStats
    from pcs_core import AnalysisConfig


def config_summary_table(config: "AnalysisConfig") -> Table:
    """Return a Rich table summarising the resolved analysis configuration."""

    table = Table(title="Configuration", box=box.ROUNDED, show_header=False)
    table.add_column("Key", style="bold cyan")
    table.add_column("Value", overflow="fold")

    for label, value in _iter_config_fields(config):
        table.add_row(label, _format_value(value))
    return table


def _iter_config_fields(config: "AnalysisConfig"):
    yield "Maximum call chain length", config.max_chain
    yield "Callers sampled per method", config.max_callers
    yield "Sampling seed", config.seed
    yield "Access path limit", config.access_path_limit
    yield "Terms per predicate", config.max_terms
    yield "Steps per query", config.query_budget
    yield "Callback paths per method", config.path_bound
    yield "Parallel jobs", config.jobs
    yield "Template table", config.templates


def _format_value(value: object) -> str:
    if value is None or value == "":
        return "[dim]default[/dim]"
    return str(value)


def _spread(values: Sequence[float]) -> tuple[str, str, str]:
    if not values:
        return ("-", "-", "-")
    return (f"{min(values):g}", f"{mean(values):.1f}", f"{max(values):g}")


def stats_table(stats: Sequence["ApiStats"]) -> Table:
    """Aggregate size table over every summarized API method."""

    table = Table(title=f"Summaries ({len(stats)} API methods)", box=box.ROUNDED)
    table.add_column("Measure", style="bold cyan")
    table.add_column("Min", justify="right")
    table.add_column("Avg", justify="right")
    table.add_column("Max", justify="right")

    columns = (
        ("ICFG nodes", [item.icfg for item in stats]),
        ("PCS nodes", [item.pcs for item in stats]),
        ("Callback nodes", [item.callbacks for item in stats]),
        ("Predicate nodes", [item.predicates for item in stats]),
        ("Update nodes", [item.updates for item in stats]),
    )
    for label, values in columns:
        table.add_row(label, *_spread(values))

    reductions = [item.reduction for item in stats]
    if reductions:
        table.add_row("Reduction", f"{min(reductions):.0%}", f"{mean(reductions):.0%}", f"{max(reductions):.0%}")
    with_nodes = sum(1 for item in stats if item.pcs > 2)
    with_callbacks = sum(1 for item in stats if item.callbacks)
    table.caption = f"{with_nodes} with at least one node, {with_callbacks} with at least one callback"
    return table


def apply_table(results: Sequence["TopLevelResult"]) -> Table:
    table = Table(title="Inter-callback analysis", box=box.ROUNDED)
    table.add_column("Top-level method", style="bold cyan")
    table.add_column("Callbacks", justify="right")
    table.add_column("API calls", justify="right")
    table.add_column("Impl edges min/avg/max", justify="right")
    table.add_column("Longest path", justify="right")
    table.add_column("Longest feasible", justify="right")
    table.add_column("Infeasible", justify="right")

    for result in results:
        low, average, high = result.impl_edge_summary()
        table.add_row(
            result.top.key,
            str(result.callbacks),
            str(result.api_calls),
            f"{low}/{average:g}/{high}",
            str(result.paths.longest),
            str(result.filtered.longest),
            str(len(result.reports)),
        )
    return table


def reports_table(reports: Sequence["InfeasibleReport"]) -> Table:
    table = Table(title="Infeasible branch outcomes", box=box.ROUNDED)
    table.add_column("API call", style="bold cyan")
    table.add_column("Branch")
    table.add_column("Outcome")
    table.add_column("Expression", overflow="fold")
    table.add_column("Resolved by", overflow="fold")

    for report in reports:
        table.add_row(
            report.call_site,
            report.branch,
            "true" if report.outcome else "false",
            report.expression,
            str(report.resolver),
        )
    return table


def compare_table(comparison: "Comparison") -> Table:
    table = Table(title="Comparison with ground truth", box=box.ROUNDED)
    table.add_column("Node kind", style="bold cyan")
    table.add_column("Match", justify="right")
    table.add_column("Missed", justify="right")
    table.add_column("Additional", justify="right")
    table.add_column("Precision", justify="right")
    table.add_column("Recall", justify="right")

    for kind, counts in comparison.totals().items():
        table.add_row(
            kind.value,
            str(counts.match),
            str(counts.missed),
            str(counts.additional),
            f"{counts.precision:.2f}",
            f"{counts.recall:.2f}",
        )
    return table
