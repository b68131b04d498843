"""Predicate callback summaries: marked ICFG nodes reduced to a small graph."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

import networkx as nx

from minifw.printer import format_stmt

from .callbacks import CallbackSignature
from .graphs import ENTRY, EXIT, ICFG, EdgeKind, IcfgNode
from .predicates import AbstractExpr
from .receivers import ReceiverSpec
from .updates import UpdateNode

logger = logging.getLogger(__name__)

LABEL_RANK = {"true": 0, "false": 1, None: 2}


class NodeKind(str, Enum):
    ENTRY = "entry"
    EXIT = "exit"
    CALLBACK = "callback"
    PREDICATE = "predicate"
    UPDATE = "update"


@dataclass(frozen=True, slots=True)
class CallbackPayload:
    signature: CallbackSignature
    receivers: tuple[ReceiverSpec, ...]
    is_async: bool = False

    def __str__(self) -> str:
        receivers = ", ".join(str(item) for item in self.receivers)
        prefix = "async " if self.is_async else ""
        return f"{prefix}{self.signature.name}() on {receivers}"


@dataclass(slots=True)
class Marks:
    """Callback, predicate and update nodes marked on one ICFG."""

    callbacks: dict[IcfgNode, CallbackPayload] = field(default_factory=dict)
    predicates: dict[IcfgNode, AbstractExpr] = field(default_factory=dict)
    updates: dict[IcfgNode, list[UpdateNode]] = field(default_factory=dict)

    def kind(self, node: IcfgNode) -> Optional[NodeKind]:
        if node in self.callbacks:
            return NodeKind.CALLBACK
        if node in self.predicates:
            return NodeKind.PREDICATE
        if node in self.updates:
            return NodeKind.UPDATE
        return None

    def __contains__(self, node: object) -> bool:
        return node in self.callbacks or node in self.predicates or node in self.updates

    def nodes(self) -> set[IcfgNode]:
        return set(self.callbacks) | set(self.predicates) | set(self.updates)


@dataclass(slots=True)
class PcsNode:
    id: int
    kind: NodeKind
    method: Optional[str] = None
    sid: Optional[int] = None
    text: str = ""
    callback: Optional[CallbackPayload] = None
    expression: Optional[AbstractExpr] = None
    updates: tuple[UpdateNode, ...] = ()

    @property
    def origin(self) -> Optional[str]:
        if self.method is None:
            return None
        return f"{self.method}#{self.sid}"

    @property
    def location(self) -> str:
        """``<class>.<method>#<sid>`` used in labels and reports."""

        if self.method is None:
            return self.kind.value
        return f"{self.method.split('(', 1)[0]}#{self.sid}"

    def describe(self) -> str:
        if self.kind is NodeKind.CALLBACK and self.callback is not None:
            return str(self.callback)
        if self.kind is NodeKind.PREDICATE and self.expression is not None:
            return str(self.expression)
        if self.kind is NodeKind.UPDATE:
            return "; ".join(str(update) for update in self.updates)
        return self.kind.value

    def to_json(self) -> dict[str, object]:
        data: dict[str, object] = {"id": self.id, "kind": self.kind.value}
        if self.method is not None:
            data.update(method=self.method, sid=self.sid, text=self.text)
        if self.callback is not None:
            data["signature"] = self.callback.signature.to_json()
            data["receivers"] = [item.to_json() for item in self.callback.receivers]
            data["async"] = self.callback.is_async
        if self.expression is not None:
            data["expression"] = self.expression.to_json()
        if self.kind is NodeKind.UPDATE:
            data["updates"] = [item.to_json() for item in self.updates]
        return data

    @classmethod
    def from_json(cls, data: dict) -> "PcsNode":
        kind = NodeKind(data["kind"])
        method = data.get("method")
        sid = data.get("sid")
        node = (method or "", sid if sid is not None else -1)
        callback = None
        if kind is NodeKind.CALLBACK:
            callback = CallbackPayload(
                CallbackSignature.from_json(data["signature"]),
                tuple(ReceiverSpec.from_json(item) for item in data["receivers"]),
                bool(data.get("async", False)),
            )
        expression = AbstractExpr.from_json(data["expression"]) if kind is NodeKind.PREDICATE else None
        updates = tuple(UpdateNode.from_json(item, node) for item in data.get("updates", ()))
        return cls(int(data["id"]), kind, method, sid, str(data.get("text", "")), callback, expression, updates)


@dataclass(frozen=True, slots=True)
class PcsEdge:
    source: int
    target: int
    label: Optional[str] = None

    def to_json(self) -> dict[str, object]:
        return {"source": self.source, "target": self.target, "label": self.label}


@dataclass(slots=True)
class PCS:
    """Summary graph of one API method; node 0 is entry and the last node is exit."""

    api: str
    nodes: list[PcsNode]
    edges: list[PcsEdge]
    icfg_nodes: int = 0

    @property
    def entry(self) -> PcsNode:
        return self.nodes[0]

    @property
    def exit(self) -> PcsNode:
        return self.nodes[-1]

    def node(self, node_id: int) -> PcsNode:
        return self.nodes[node_id]

    def successors(self, node_id: int) -> list[PcsEdge]:
        return [edge for edge in self.edges if edge.source == node_id]

    def predecessors(self, node_id: int) -> list[PcsEdge]:
        return [edge for edge in self.edges if edge.target == node_id]

    def of_kind(self, kind: NodeKind) -> list[PcsNode]:
        return [node for node in self.nodes if node.kind is kind]

    @property
    def is_empty(self) -> bool:
        """True when the summary holds no callback, predicate or update node."""

        return len(self.nodes) == 2

    def __len__(self) -> int:
        return len(self.nodes)

    def to_json(self) -> dict[str, object]:
        return {
            "api": self.api,
            "icfg_nodes": self.icfg_nodes,
            "nodes": [node.to_json() for node in self.nodes],
            "edges": [edge.to_json() for edge in self.edges],
        }

    @classmethod
    def from_json(cls, data: dict) -> "PCS":
        return cls(
            api=str(data["api"]),
            nodes=[PcsNode.from_json(item) for item in data["nodes"]],
            edges=[PcsEdge(int(item["source"]), int(item["target"]), item.get("label")) for item in data["edges"]],
            icfg_nodes=int(data.get("icfg_nodes", 0)),
        )


def methods_with_marks(icfg: ICFG, marks: Marks) -> set[str]:
    """Members that hold a marked node themselves or through inlined callees."""

    holding = {key for key, _ in marks.nodes()}
    changed = True
    while changed:
        changed = False
        for (key, _), edges in icfg.call_targets.items():
            if key not in holding and any(edge.callee in holding for edge in edges):
                holding.add(key)
                changed = True
    return holding


def successors(
    icfg: ICFG, node: IcfgNode, stack: tuple[IcfgNode, ...], holding: set[str]
) -> Iterator[tuple[IcfgNode, EdgeKind, tuple[IcfgNode, ...]]]:
    """Realizable successors of ``node`` under the call ``stack``.

    Callees without marked nodes are stepped over; a call whose callees all hold
    marks continues only through them, and their exits return to this call site.
    """

    key, position = node
    if position == EXIT:
        if stack:
            for target, kind in icfg.intra_successors(stack[-1]):
                yield target, kind, stack[:-1]
        return

    targets = icfg.call_targets.get(node, [])
    entered = {edge.callee for edge in targets if edge.callee in holding and len(stack) < icfg.max_depth}
    for edge in targets:
        if edge.callee in entered:
            kind = EdgeKind.ASYNC_CALL if edge.is_async else EdgeKind.CALL
            yield (edge.callee, ENTRY), kind, stack + (node,)
    if not entered or any(edge.callee not in entered for edge in targets):
        for target, kind in icfg.intra_successors(node):
            yield target, kind, stack


def generate_summary_graph(icfg: ICFG, marks: Marks) -> PCS:
    """Reduce the marked ICFG to its callback, predicate and update nodes.

    A worklist of (node, last marked node, outcome label, call stack) tuples
    walks the ICFG from entry; reaching a marked node or the exit adds an
    edge from the last marked node.
    """

    holding = methods_with_marks(icfg, marks)
    entry, exit_ = icfg.entry, icfg.exit
    found: set[tuple[IcfgNode, IcfgNode, Optional[str]]] = set()
    visited: set[tuple] = set()
    work: list[tuple[IcfgNode, IcfgNode, Optional[str], tuple[IcfgNode, ...]]] = [(entry, entry, None, ())]

    while work:
        state = work.pop()
        if state in visited:
            continue
        visited.add(state)
        node, last, label, stack = state
        if node != entry and (node in marks or (node == exit_ and not stack)):
            found.add((last, node, label))
            last, label = node, None
            if node == exit_:
                continue
        for target, kind, next_stack in successors(icfg, node, stack, holding):
            next_label = label
            if last == node and node in marks.predicates and kind.is_branch:
                next_label = kind.value
            work.append((target, last, next_label, next_stack))

    return _number(icfg, marks, found)


def _number(icfg: ICFG, marks: Marks, found: set[tuple[IcfgNode, IcfgNode, Optional[str]]]) -> PCS:
    graph = nx.MultiDiGraph()
    graph.add_nodes_from([icfg.entry, icfg.exit])
    for source, target, label in found:
        graph.add_edge(source, target, key=label or "", label=label)
    alive = nx.ancestors(graph, icfg.exit) | {icfg.exit}
    graph.remove_nodes_from([node for node in list(graph.nodes) if node not in alive and node != icfg.entry])
    if icfg.entry not in alive:
        graph.remove_edges_from(list(graph.edges(keys=True)))

    def out_order(item: tuple[IcfgNode, IcfgNode, dict]) -> tuple:
        _, target, data = item
        label = data["label"]
        return (target == icfg.exit, LABEL_RANK[label], icfg.order(target))

    ids: dict[IcfgNode, int] = {icfg.entry: 0}
    queue = deque([icfg.entry])
    while queue:
        current = queue.popleft()
        for _, target, _ in sorted(graph.out_edges(current, data=True), key=out_order):
            if target not in ids and target != icfg.exit:
                ids[target] = len(ids)
                queue.append(target)
    ids[icfg.exit] = len(ids)

    ordered = sorted(ids.items(), key=lambda item: item[1])
    nodes = [_make_node(icfg, marks, icfg_node, node_id) for icfg_node, node_id in ordered]
    edges = [
        PcsEdge(ids[source], ids[target], label)
        for source, target, label in graph.edges(data="label")
        if source in ids and target in ids
    ]
    pcs = PCS(api=icfg.root.key, nodes=nodes, edges=_sorted_edges(edges), icfg_nodes=len(icfg))
    logger.info("Summarized API method", extra={"api": pcs.api, "icfg": pcs.icfg_nodes, "pcs": len(pcs)})
    return pcs


def _sorted_edges(edges: list[PcsEdge]) -> list[PcsEdge]:
    return sorted(edges, key=lambda edge: (edge.source, LABEL_RANK[edge.label], edge.target))


def _make_node(icfg: ICFG, marks: Marks, node: IcfgNode, node_id: int) -> PcsNode:
    if node == icfg.entry:
        return PcsNode(node_id, NodeKind.ENTRY)
    if node == icfg.exit:
        return PcsNode(node_id, NodeKind.EXIT)
    kind = marks.kind(node)
    stmt = icfg.stmt(node)
    text = format_stmt(stmt).rstrip(";") if stmt is not None else ""
    return PcsNode(
        node_id,
        kind,
        method=node[0],
        sid=node[1],
        text=text,
        callback=marks.callbacks.get(node),
        expression=marks.predicates.get(node),
        updates=tuple(marks.updates.get(node, ())),
    )
