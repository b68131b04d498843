"""Graphviz DOT export for CFGs, ICFGs, summaries and inter-callback graphs."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Union

from graphviz import Digraph

from analysis.client import SUMMARY, GNode, InterCallbackICFG
from analysis.graphs import CFG, ENTRY, EXIT, ICFG, node_order
from analysis.summary import PCS, NodeKind, PcsNode
from minifw.printer import format_stmt
from pcs_core.errors import PcsError

logger = logging.getLogger(__name__)

Exportable = Union[CFG, ICFG, PCS, InterCallbackICFG]

_SHAPES = {
    NodeKind.ENTRY: dict(shape="circle", label="entry"),
    NodeKind.EXIT: dict(shape="doublecircle", label="exit"),
    NodeKind.CALLBACK: dict(shape="ellipse"),
    NodeKind.PREDICATE: dict(shape="diamond"),
    NodeKind.UPDATE: dict(shape="box", style="filled", fillcolor="palegreen"),
}


def _short(key: str) -> str:
    return key.split("(", 1)[0]


def _pcs_attrs(node: PcsNode) -> dict[str, str]:
    attrs = dict(_SHAPES[node.kind])
    if node.kind not in (NodeKind.ENTRY, NodeKind.EXIT):
        attrs["label"] = f"{node.location}: {node.describe()}"
    return attrs


def _position(sid: int) -> str:
    return {ENTRY: "entry", EXIT: "exit"}.get(sid, str(sid))


def _stmt_label(key: str, sid: int, text: str) -> str:
    return f"{_short(key)}#{_position(sid)}" + (f": {text}" if text else "")


def pcs_to_dot(pcs: PCS) -> str:
    """Callbacks as ellipses, predicates as diamonds, updates as green boxes."""

    dot = Digraph(name=_short(pcs.api))
    for node in pcs.nodes:
        dot.node(f"n{node.id}", **_pcs_attrs(node))
    for edge in pcs.edges:
        dot.edge(f"n{edge.source}", f"n{edge.target}", **({"label": edge.label} if edge.label else {}))
    return dot.source


def cfg_to_dot(cfg: CFG) -> str:
    dot = Digraph(name=_short(cfg.key))
    for node in cfg.nodes():
        stmt = cfg.stmt(node)
        text = format_stmt(stmt).rstrip(";") if stmt is not None else ""
        dot.node(str(node), label=_stmt_label(cfg.key, node, text), shape="box")
    for source, target, kind in sorted(cfg.graph.edges(keys=True), key=lambda e: (node_order(e[0]), node_order(e[1]))):
        dot.edge(str(source), str(target), **({"label": kind.value} if kind.is_branch else {}))
    return dot.source


def icfg_to_dot(icfg: ICFG) -> str:
    dot = Digraph(name=_short(icfg.root.key))
    ordered = sorted(icfg.graph.nodes, key=icfg.order)
    for key, sid in ordered:
        stmt = icfg.stmt((key, sid))
        text = format_stmt(stmt).rstrip(";") if stmt is not None else ""
        dot.node(f"{key}#{sid}", label=_stmt_label(key, sid, text), shape="box")
    edges = sorted(icfg.graph.edges(keys=True), key=lambda e: (icfg.order(e[0]), icfg.order(e[1]), e[2].value))
    for (source_key, source), (target_key, target), kind in edges:
        attrs = {"label": kind.value} if kind.is_branch or kind.is_interprocedural else {}
        if kind.is_interprocedural:
            attrs["style"] = "dashed"
        dot.edge(f"{source_key}#{source}", f"{target_key}#{target}", **attrs)
    return dot.source


def inter_to_dot(g: InterCallbackICFG) -> str:
    """App statements as boxes; spliced summary nodes keep their summary shapes."""

    dot = Digraph(name=_short(g.top.key))
    for node in sorted(g.graph.nodes):
        if node.kind == SUMMARY:
            attrs = _pcs_attrs(g.pcs_node(node))
        else:
            attrs = {"label": _stmt_label(node.owner, node.index, _app_text(g, node)), "shape": "box"}
        dot.node(str(node), **attrs)
    for source, target, (kind, label) in sorted(g.graph.edges(keys=True), key=lambda e: (e[0], e[1], e[2][0])):
        attrs = {"label": label} if label else {}
        if kind not in ("flow", "true", "false", "summary"):
            attrs.update(style="dashed", xlabel=kind)
        dot.edge(str(source), str(target), **attrs)
    return dot.source


def _app_text(g: InterCallbackICFG, node: GNode) -> str:
    method = g.methods.get(node.owner)
    if method is None or node.index < 0:
        return ""
    return format_stmt(method.body[node.index]).rstrip(";")


def to_dot(item: Exportable) -> str:
    if isinstance(item, PCS):
        return pcs_to_dot(item)
    if isinstance(item, CFG):
        return cfg_to_dot(item)
    if isinstance(item, ICFG):
        return icfg_to_dot(item)
    if isinstance(item, InterCallbackICFG):
        return inter_to_dot(item)
    raise PcsError(f"Cannot export {type(item).__name__} as DOT")


def export_dot(item: Exportable, path: Path) -> None:
    """Write ``item`` as DOT; identical inputs give identical files."""

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(to_dot(item), encoding="utf-8")
    except OSError as exc:
        raise PcsError(f"Cannot write {path}: {exc}") from exc
    logger.debug("Wrote DOT file", extra={"path": str(path)})
