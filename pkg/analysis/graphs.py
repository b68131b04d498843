"""Control flow graphs, control dependence, call graphs and per-API ICFGs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional

import networkx as nx

from minifw.hierarchy import cha_targets, resolve_dispatch
from minifw.model import CallKind, Goto, IfGoto, Invoke, MethodDef, Program, Return, Signature, Stmt
from pcs_core.errors import PreconditionError

logger = logging.getLogger(__name__)

ENTRY = -1
EXIT = -2

IcfgNode = tuple[str, int]


class EdgeKind(str, Enum):
    FLOW = "flow"
    TRUE = "true"
    FALSE = "false"
    CALL = "call"
    RETURN = "return"
    ASYNC_CALL = "async-call"
    ASYNC_RETURN = "async-return"

    @property
    def is_branch(self) -> bool:
        return self in (EdgeKind.TRUE, EdgeKind.FALSE)

    @property
    def is_interprocedural(self) -> bool:
        return self in (EdgeKind.CALL, EdgeKind.RETURN, EdgeKind.ASYNC_CALL, EdgeKind.ASYNC_RETURN)


INTRA_KINDS = (EdgeKind.FLOW, EdgeKind.TRUE, EdgeKind.FALSE)


def node_order(node: int) -> tuple[int, int]:
    """Sort key placing entry first and exit last."""

    if node == ENTRY:
        return (0, 0)
    if node == EXIT:
        return (2, 0)
    return (1, node)


def exit_augmented(graph: nx.DiGraph) -> nx.DiGraph:
    """Copy of ``graph`` where every loop that never reaches EXIT gets one edge to it.

    The edge leaves the first node, in statement order, of each sink strongly
    connected component other than EXIT's.
    """

    forward = graph.copy()
    condensed = nx.condensation(graph)
    for component in condensed.nodes:
        members = condensed.nodes[component]["members"]
        if condensed.out_degree(component) == 0 and EXIT not in members:
            forward.add_edge(min(members, key=node_order), EXIT)
    return forward


@dataclass(slots=True)
class CFG:
    """Statement-level CFG of one method; nodes are statement ids plus ENTRY and EXIT."""

    method: MethodDef
    graph: nx.MultiDiGraph
    unreachable: frozenset[int] = frozenset()
    _ipdom: Optional[dict[int, int]] = field(default=None, repr=False)
    _dependents: Optional[dict[int, frozenset[int]]] = field(default=None, repr=False)

    @property
    def key(self) -> str:
        return self.method.key

    def nodes(self) -> list[int]:
        return sorted(self.graph.nodes, key=node_order)

    def stmt(self, node: int) -> Optional[Stmt]:
        if node in (ENTRY, EXIT):
            return None
        return self.method.body[node]

    def successors(self, node: int) -> list[tuple[int, EdgeKind]]:
        return sorted(
            ((target, kind) for _, target, kind in self.graph.out_edges(node, keys=True)),
            key=lambda item: (node_order(item[0]), item[1].value),
        )

    def predecessors(self, node: int) -> list[tuple[int, EdgeKind]]:
        return sorted(
            ((source, kind) for source, _, kind in self.graph.in_edges(node, keys=True)),
            key=lambda item: (node_order(item[0]), item[1].value),
        )

    def is_branch(self, node: int) -> bool:
        return isinstance(self.stmt(node), IfGoto)

    def branch_nodes(self) -> list[int]:
        return [node for node in self.nodes() if self.is_branch(node) and node not in self.unreachable]

    def immediate_postdominators(self) -> dict[int, int]:
        """Immediate postdominator of every node reachable from entry (EXIT maps to itself)."""

        if self._ipdom is None:
            reverse = self._postdominance_graph()
            idom = nx.immediate_dominators(reverse, EXIT)
            idom[EXIT] = EXIT
            self._ipdom = dict(idom)
        return self._ipdom

    def _postdominance_graph(self) -> nx.DiGraph:
        live = [node for node in self.graph.nodes if node not in self.unreachable]
        return exit_augmented(nx.DiGraph(self.graph.subgraph(live))).reverse(copy=True)

    def postdominates(self, dominator: int, node: int) -> bool:
        ipdom = self.immediate_postdominators()
        current = node
        while True:
            if current == dominator:
                return True
            parent = ipdom.get(current)
            if parent is None or parent == current:
                return False
            current = parent

    def control_dependents(self, branch: int) -> frozenset[int]:
        """Statements directly control dependent on ``branch``."""

        if self._dependents is None:
            self._dependents = self._compute_dependents()
        return self._dependents.get(branch, frozenset())

    def _compute_dependents(self) -> dict[int, frozenset[int]]:
        ipdom = self.immediate_postdominators()
        dependents: dict[int, set[int]] = {}
        for branch in self.branch_nodes():
            stop = ipdom.get(branch)
            found: set[int] = set()
            for target, _ in self.successors(branch):
                runner: Optional[int] = target
                while runner is not None and runner != stop and runner != EXIT:
                    found.add(runner)
                    parent = ipdom.get(runner)
                    runner = None if parent == runner else parent
            dependents[branch] = found
        return {key: frozenset(value) for key, value in dependents.items()}


def build_cfg(method: MethodDef) -> CFG:
    """Build the CFG of a method body; control falls through to EXIT after the last statement."""

    if method.is_abstract:
        raise PreconditionError(f"Method {method.key} has no body")

    graph = nx.MultiDiGraph(method=method.key)
    graph.add_node(ENTRY)
    graph.add_nodes_from(range(len(method.body)))
    graph.add_node(EXIT)
    labels = method.label_targets()
    last = len(method.body) - 1

    def next_of(sid: int) -> int:
        return sid + 1 if sid < last else EXIT

    graph.add_edge(ENTRY, 0 if method.body else EXIT, key=EdgeKind.FLOW)
    for stmt in method.body:
        if isinstance(stmt, IfGoto):
            graph.add_edge(stmt.sid, labels[stmt.label], key=EdgeKind.TRUE)
            graph.add_edge(stmt.sid, next_of(stmt.sid), key=EdgeKind.FALSE)
        elif isinstance(stmt, Goto):
            graph.add_edge(stmt.sid, labels[stmt.label], key=EdgeKind.FLOW)
        elif isinstance(stmt, Return):
            graph.add_edge(stmt.sid, EXIT, key=EdgeKind.FLOW)
        else:
            graph.add_edge(stmt.sid, next_of(stmt.sid), key=EdgeKind.FLOW)

    reachable = nx.descendants(graph, ENTRY) | {ENTRY}
    unreachable = frozenset(node for node in graph.nodes if node not in reachable and node != EXIT)
    if unreachable:
        logger.debug("Unreachable statements", extra={"method": method.key, "nodes": sorted(unreachable)})
    return CFG(method=method, graph=graph, unreachable=unreachable)


def influence(cfg: CFG, branch: int) -> frozenset[int]:
    """Statements transitively control dependent on ``branch``."""

    if not cfg.is_branch(branch):
        raise PreconditionError(f"Statement {branch} of {cfg.key} is not a conditional branch")

    result: set[int] = set()
    pending = [branch]
    expanded: set[int] = set()
    while pending:
        current = pending.pop()
        if current in expanded:
            continue
        expanded.add(current)
        for dependent in cfg.control_dependents(current):
            result.add(dependent)
            if cfg.is_branch(dependent):
                pending.append(dependent)
    return frozenset(result)


class CfgCache:
    """Memoizes CFGs of a program's methods by key."""

    def __init__(self, program: Program) -> None:
        self.program = program
        self._cfgs: dict[str, CFG] = {}

    def __getitem__(self, key: str) -> CFG:
        cached = self._cfgs.get(key)
        if cached is None:
            method = self.program.method(key)
            if method is None:
                raise PreconditionError(f"Unknown method {key}")
            cached = build_cfg(method)
            self._cfgs[key] = cached
        return cached


@dataclass(frozen=True, slots=True, order=True)
class CallEdge:
    caller: str
    site: int
    callee: str
    kind: EdgeKind = EdgeKind.CALL

    @property
    def is_async(self) -> bool:
        return self.kind is EdgeKind.ASYNC_CALL

    def to_json(self) -> dict[str, object]:
        return {"caller": self.caller, "site": self.site, "callee": self.callee}


@dataclass(slots=True)
class CallGraph:
    """Method-level call graph; parallel edges are keyed by ``(site, kind)``."""

    graph: nx.MultiDiGraph
    policy: str = "cha"

    def edges(self, *, include_async: bool = True) -> list[CallEdge]:
        found = [
            CallEdge(caller, key[0], callee, key[1])
            for caller, callee, key in self.graph.edges(keys=True)
            if include_async or key[1] is EdgeKind.CALL
        ]
        return sorted(found)

    def add_edge(self, edge: CallEdge) -> None:
        self.graph.add_edge(edge.caller, edge.callee, key=(edge.site, edge.kind))

    def callees(self, caller: str, site: int) -> list[CallEdge]:
        if caller not in self.graph:
            return []
        return sorted(
            CallEdge(caller, key[0], callee, key[1])
            for _, callee, key in self.graph.out_edges(caller, keys=True)
            if key[0] == site
        )

    def callers(self, callee: str) -> list[CallEdge]:
        if callee not in self.graph:
            return []
        return sorted(
            CallEdge(caller, key[0], callee, key[1]) for caller, _, key in self.graph.in_edges(callee, keys=True)
        )

    def copy(self) -> "CallGraph":
        return CallGraph(graph=self.graph.copy(), policy=self.policy)


def call_targets(program: Program, method: MethodDef, stmt: Invoke) -> list[MethodDef]:
    """Resolve the methods an invoke statement may run, using class hierarchy analysis."""

    signature_ = Signature(stmt.method, stmt.arity)
    if stmt.call_kind is CallKind.STATIC:
        target = resolve_dispatch(program, stmt.base, signature_)
        return [target] if target is not None else []
    declared = method.local_type(stmt.base)
    if declared is None:
        return []
    if stmt.call_kind is CallKind.SPECIAL:
        target = resolve_dispatch(program, declared, signature_)
        return [target] if target is not None else []
    return cha_targets(program, declared, signature_)


def build_call_graph(program: Program) -> CallGraph:
    """Class hierarchy analysis call graph over every method with a body."""

    graph = nx.MultiDiGraph()
    for method in program.methods():
        graph.add_node(method.key)
    for method in program.methods():
        for stmt in method.body:
            if not isinstance(stmt, Invoke):
                continue
            for target in call_targets(program, method, stmt):
                graph.add_edge(method.key, target.key, key=(stmt.sid, EdgeKind.CALL))
    logger.debug("Built call graph", extra={"methods": graph.number_of_nodes(), "edges": graph.number_of_edges()})
    return CallGraph(graph=graph)


@dataclass(slots=True)
class ICFG:
    """Interprocedural CFG rooted at one API method; each member body appears once."""

    program: Program
    root: MethodDef
    graph: nx.MultiDiGraph
    members: dict[str, CFG]
    call_targets: dict[IcfgNode, list[CallEdge]]
    max_depth: int = 16
    skip: frozenset[IcfgNode] = frozenset()
    _order: Optional[dict[str, int]] = field(default=None, repr=False)

    @property
    def entry(self) -> IcfgNode:
        return (self.root.key, ENTRY)

    @property
    def exit(self) -> IcfgNode:
        return (self.root.key, EXIT)

    def __len__(self) -> int:
        return self.graph.number_of_nodes()

    def member_order(self, key: str) -> int:
        if self._order is None:
            self._order = {name: index for index, name in enumerate(self.members)}
        return self._order[key]

    def order(self, node: IcfgNode) -> tuple[int, tuple[int, int]]:
        return (self.member_order(node[0]), node_order(node[1]))

    def stmt(self, node: IcfgNode) -> Optional[Stmt]:
        return self.members[node[0]].stmt(node[1])

    def successors(self, node: IcfgNode) -> list[tuple[IcfgNode, EdgeKind]]:
        return sorted(
            ((target, kind) for _, target, kind in self.graph.out_edges(node, keys=True)),
            key=lambda item: (self.order(item[0]), item[1].value),
        )

    def predecessors(self, node: IcfgNode) -> list[tuple[IcfgNode, EdgeKind]]:
        return sorted(
            ((source, kind) for source, _, kind in self.graph.in_edges(node, keys=True)),
            key=lambda item: (self.order(item[0]), item[1].value),
        )

    def intra_successors(self, node: IcfgNode) -> list[tuple[IcfgNode, EdgeKind]]:
        return [item for item in self.successors(node) if item[1] in INTRA_KINDS]

    def callers_of(self, key: str) -> list[CallEdge]:
        """Call edges of this ICFG that enter ``key``."""

        found = [edge for edges in self.call_targets.values() for edge in edges if edge.callee == key]
        return sorted(found)

    def interprocedural_edges(self) -> list[tuple[IcfgNode, IcfgNode, EdgeKind]]:
        return sorted(
            ((source, target, kind) for source, target, kind in self.graph.edges(keys=True) if kind.is_interprocedural),
            key=lambda item: (self.order(item[0]), self.order(item[1]), item[2].value),
        )


def build_icfg(
    program: Program,
    api: MethodDef,
    cg: CallGraph,
    *,
    max_depth: int = 16,
    skip: Iterable[IcfgNode] = (),
    cfgs: Optional[CfgCache] = None,
    include: Optional[Callable[[MethodDef], bool]] = None,
) -> ICFG:
    """Inline framework callees reachable from ``api`` into one ICFG.

    Call sites listed in ``skip`` (callback call sites) are never entered.
    Each method body is materialized once; calls beyond ``max_depth`` stay opaque.
    """

    if not api.is_api:
        raise PreconditionError(f"Method {api.key} is not an API method")
    cache = cfgs or CfgCache(program)
    skipped = frozenset(skip)
    accept = include or (lambda method: program.is_framework(method.owner) and method.has_body)

    graph = nx.MultiDiGraph(root=api.key)
    members: dict[str, CFG] = {}
    targets: dict[IcfgNode, list[CallEdge]] = {}
    depth: dict[str, int] = {api.key: 1}
    queue = [api.key]

    while queue:
        key = queue.pop(0)
        if key in members:
            continue
        cfg = cache[key]
        members[key] = cfg
        for source, target, kind in cfg.graph.edges(keys=True):
            graph.add_edge((key, source), (key, target), key=kind)

        for stmt in cfg.method.body:
            node = (key, stmt.sid)
            if not isinstance(stmt, Invoke) or node in skipped or stmt.sid in cfg.unreachable:
                continue
            for edge in cg.callees(key, stmt.sid):
                callee = program.method(edge.callee)
                if callee is None or not accept(callee):
                    continue
                if edge.callee not in depth:
                    if depth[key] + 1 > max_depth:
                        continue
                    depth[edge.callee] = depth[key] + 1
                    queue.append(edge.callee)
                targets.setdefault(node, []).append(edge)

    for node, edges in targets.items():
        returns = [(target, kind) for target, kind in _intra(graph, node)]
        for edge in edges:
            call_kind = EdgeKind.ASYNC_CALL if edge.is_async else EdgeKind.CALL
            return_kind = EdgeKind.ASYNC_RETURN if edge.is_async else EdgeKind.RETURN
            graph.add_edge(node, (edge.callee, ENTRY), key=call_kind)
            for target, _ in returns:
                graph.add_edge((edge.callee, EXIT), target, key=return_kind)

    logger.debug("Built ICFG", extra={"api": api.key, "members": len(members), "nodes": graph.number_of_nodes()})
    return ICFG(
        program=program,
        root=api,
        graph=graph,
        members=members,
        call_targets={node: sorted(edges) for node, edges in targets.items()},
        max_depth=max_depth,
        skip=skipped,
    )


def _intra(graph: nx.MultiDiGraph, node: IcfgNode) -> list[tuple[IcfgNode, EdgeKind]]:
    return sorted(
        ((target, kind) for _, target, kind in graph.out_edges(node, keys=True) if kind in INTRA_KINDS),
        key=lambda item: (item[0][0], node_order(item[0][1])),
    )
