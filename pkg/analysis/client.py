"""Client analysis: splice summaries into app code, enumerate callback paths, find infeasible branches."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from statistics import mean
from typing import Iterable, Optional

import networkx as nx

from minifw.hierarchy import resolve_dispatch
from minifw.model import (
    Assign,
    Const,
    FieldLoad,
    FieldStore,
    Invoke,
    Local,
    MethodDef,
    New,
    Operand,
    Program,
    StaticLoad,
    StaticStore,
)
from pcs_core.config import AnalysisConfig
from pcs_core.errors import Diagnostic, PreconditionError, warning

from .backward import Scope
from .callbacks import CallbackSignature, callback_signatures
from .graphs import ENTRY, EXIT, CfgCache, call_targets
from .pipeline import map_jobs
from .predicates import AbstractVariable, Arithmetic, Term
from .receivers import PARAM_KIND, THIS_KIND
from .store import SummaryStore
from .summary import PCS, NodeKind, PcsNode
from .templates import NONNULL, POSITIVE, is_insertion, predicate_after_insertion
from .updates import EffectKind, UpdateNode

logger = logging.getLogger(__name__)

APP = "app"
SUMMARY = "pcs"


@dataclass(frozen=True, slots=True, order=True)
class GNode:
    """Node of an inter-callback ICFG: an app statement or a spliced summary node, in a context."""

    kind: str
    context: tuple[str, ...]
    owner: str
    index: int

    def __str__(self) -> str:
        if self.kind == APP:
            position = {ENTRY: "entry", EXIT: "exit"}.get(self.index, str(self.index))
            leaf = f"{self.owner}#{position}"
        else:
            leaf = f"{self.owner}@{self.index}"
        return "/".join((*self.context, leaf))


class GEdge:
    FLOW = "flow"
    TRUE = "true"
    FALSE = "false"
    CALL = "call"
    RETURN = "return"
    SPLICE_CALL = "splice-call"
    SPLICE_RETURN = "splice-return"
    SUMMARY = "summary"
    IMPL_CALL = "impl-call"
    IMPL_RETURN = "impl-return"


@dataclass(slots=True)
class SplicedCall:
    """One API call site whose summary was spliced in."""

    call: GNode
    caller: MethodDef
    stmt: Invoke
    api: str
    pcs: PCS
    context: tuple[str, ...]
    impl_edges: int = 0

    @property
    def site(self) -> str:
        return f"{self.caller.key}#{self.stmt.sid}"

    def node(self, node_id: int) -> GNode:
        return GNode(SUMMARY, self.context, self.api, node_id)


@dataclass(slots=True)
class InterCallbackICFG:
    top: MethodDef
    graph: nx.MultiDiGraph
    spliced: dict[tuple[str, ...], SplicedCall] = field(default_factory=dict)
    callback_entries: dict[GNode, str] = field(default_factory=dict)
    impl_targets: set[str] = field(default_factory=set)
    pass_through: dict[GNode, str] = field(default_factory=dict)
    methods: dict[str, MethodDef] = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def entry(self) -> GNode:
        return GNode(APP, (), self.top.key, ENTRY)

    @property
    def exit(self) -> GNode:
        return GNode(APP, (), self.top.key, EXIT)

    def out_edges(self, node: GNode) -> list[tuple[GNode, GNode, tuple[str, Optional[str]]]]:
        return sorted(self.graph.out_edges(node, keys=True), key=lambda item: (item[1], item[2][0], item[2][1] or ""))

    def predecessors(self, node: GNode) -> list[GNode]:
        return sorted(set(self.graph.predecessors(node)))

    def pcs_node(self, node: GNode) -> Optional[PcsNode]:
        if node.kind != SUMMARY:
            return None
        return self.spliced[node.context].pcs.node(node.index)

    def __len__(self) -> int:
        return self.graph.number_of_nodes()


class TypeOracle:
    """Flow-insensitive possible runtime classes of locals inside one app method."""

    def __init__(self, program: Program) -> None:
        self.program = program

    def cone(self, declared: Optional[str]) -> set[str]:
        if declared is None or self.program.lookup(declared) is None:
            return set()
        return {
            name
            for name in self.program.subtypes(declared)
            if not self.program.lookup(name).is_interface  # type: ignore[union-attr]
        }

    def local_types(self, method: MethodDef, name: str, seen: Optional[set[str]] = None) -> set[str]:
        seen = set() if seen is None else seen
        if name in seen:
            return set()
        seen.add(name)
        definitions = [stmt for stmt in method.body if stmt.defined_local() == name]
        if not definitions:
            return self.cone(method.local_type(name))

        types: set[str] = set()
        for stmt in definitions:
            match stmt:
                case New(class_name=class_name):
                    types.add(class_name)
                case Assign(value=value):
                    types |= self.operand_types(method, value, seen)
                case FieldLoad(base=base, field_name=field_name):
                    types |= self.field_types(method, base, field_name, seen)
                case StaticLoad(owner=owner, field_name=field_name):
                    types |= self.cone(self.program.field_type(owner, field_name))
                case _:
                    types |= self.cone(method.local_type(name))
        return types

    def operand_types(self, method: MethodDef, operand: Operand, seen: Optional[set[str]] = None) -> set[str]:
        if isinstance(operand, Local):
            return self.local_types(method, operand.name, seen)
        if operand.kind == "string" and self.program.lookup(str(operand.value)) is not None:
            # String constants name the component class they launch.
            return {str(operand.value)}
        return set()

    def field_types(self, method: MethodDef, base: str, field_name: str, seen: Optional[set[str]] = None) -> set[str]:
        stored = [
            stmt.value
            for stmt in method.body
            if isinstance(stmt, FieldStore) and stmt.base == base and stmt.field_name == field_name
        ]
        if stored:
            return {name for value in stored for name in self.operand_types(method, value, set(seen or ()))}
        types: set[str] = set()
        for owner in self.local_types(method, base, set(seen or ())):
            types |= self.cone(self.program.field_type(owner, field_name))
        return types

    def path_types(self, method: MethodDef, operand: Operand, path: tuple[str, ...]) -> set[str]:
        if path and isinstance(operand, Local) and not path[0].endswith("()"):
            types = self.field_types(method, operand.name, path[0])
            rest = path[1:]
        else:
            types = self.operand_types(method, operand)
            rest = path
        for token in rest:
            if token.endswith("()"):
                return set()
            types = {name for owner in types for name in self.cone(self.program.field_type(owner, token))}
        return types


def resolve_callback_impl(node: PcsNode, program: Program, caller: MethodDef, call: Invoke) -> list[MethodDef]:
    """App methods a summary callback node may run for the API call ``call`` in ``caller``."""

    if node.kind is not NodeKind.CALLBACK or node.callback is None:
        raise PreconditionError(f"Summary node {node.id} is not a callback node")
    oracle = TypeOracle(program)
    types: set[str] = set()
    for receiver in node.callback.receivers:
        if receiver.kind == THIS_KIND:
            types |= oracle.local_types(caller, call.base)
        elif receiver.kind == PARAM_KIND and 0 <= receiver.index < len(call.args):
            types |= oracle.path_types(caller, call.args[receiver.index], receiver.path)

    signature = node.callback.signature.signature
    found: dict[str, MethodDef] = {}
    for name in sorted(types):
        target = resolve_dispatch(program, name, signature)
        if target is not None and program.is_app(target.owner):
            found[target.key] = target
    return [found[key] for key in sorted(found)]


class _Builder:
    def __init__(self, program: Program, store: SummaryStore, config: AnalysisConfig, graph: InterCallbackICFG) -> None:
        self.program = program
        self.store = store
        self.config = config
        self.g = graph
        self.cfgs = CfgCache(program)
        self.built: set[tuple[tuple[str, ...], str]] = set()

    def method(self, method: MethodDef, context: tuple[str, ...]) -> tuple[GNode, GNode]:
        entry, exit_ = GNode(APP, context, method.key, ENTRY), GNode(APP, context, method.key, EXIT)
        if (context, method.key) in self.built:
            return entry, exit_
        self.built.add((context, method.key))
        self.g.methods[method.key] = method
        cfg = self.cfgs[method.key]

        def at(index: int) -> GNode:
            return GNode(APP, context, method.key, index)

        redirected: set[int] = set()
        for stmt in method.body:
            if isinstance(stmt, Invoke) and stmt.sid not in cfg.unreachable:
                if self._call(method, stmt, context, at, [at(target) for target, _ in cfg.successors(stmt.sid)]):
                    redirected.add(stmt.sid)

        for source, target, kind in cfg.graph.edges(keys=True):
            if source in redirected:
                continue
            label = kind.value if kind.is_branch else None
            self.g.graph.add_edge(at(source), at(target), key=(kind.value, label))
        return entry, exit_

    def _call(self, method: MethodDef, stmt: Invoke, context: tuple[str, ...], at, returns: list[GNode]) -> bool:
        """Wire the call; True when its fall-through edge is replaced by callee edges.

        Calls whose callee is neither spliced nor built are recorded in
        ``pass_through`` so branch correlation treats them as opaque.
        """

        call = at(stmt.sid)
        targets = call_targets(self.program, method, stmt)
        if not targets:
            self.g.pass_through[call] = f"{stmt.base}.{stmt.method}"
            return False
        if len(context) >= self.config.max_chain:
            self.g.pass_through[call] = targets[0].key
            return False
        handled = True
        for target in targets:
            if target.is_api:
                pcs = self.store.get(target.key)
                if pcs is None:
                    handled = False
                    self.g.pass_through[call] = target.key
                    message = f"No summary for {target.key} called at {method.key}#{stmt.sid}"
                    self.g.diagnostics.append(warning(message, line=stmt.line, column=stmt.column))
                    logger.warning("Unsummarized API call", extra={"api": target.key, "site": f"{method.key}#{stmt.sid}"})
                    continue
                self._splice(method, stmt, context, call, target.key, pcs, returns, len(targets) > 1)
            elif self.program.is_app(target.owner):
                entry, exit_ = self.method(target, context)
                self.g.graph.add_edge(call, entry, key=(GEdge.CALL, None))
                for successor in returns:
                    self.g.graph.add_edge(exit_, successor, key=(GEdge.RETURN, None))
            else:
                handled = False
                self.g.pass_through[call] = target.key
                logger.debug("Opaque framework call", extra={"callee": target.key, "site": f"{method.key}#{stmt.sid}"})
        return handled

    def _splice(
        self,
        caller: MethodDef,
        stmt: Invoke,
        context: tuple[str, ...],
        call: GNode,
        api: str,
        pcs: PCS,
        returns: list[GNode],
        qualify: bool,
    ) -> None:
        site = f"{caller.key}#{stmt.sid}"
        inner = context + ((f"{site}>{api}" if qualify else site),)
        spliced = SplicedCall(call=call, caller=caller, stmt=stmt, api=api, pcs=pcs, context=inner)
        self.g.spliced[inner] = spliced

        graph = self.g.graph
        graph.add_edge(call, spliced.node(pcs.entry.id), key=(GEdge.SPLICE_CALL, None))
        for successor in returns:
            graph.add_edge(spliced.node(pcs.exit.id), successor, key=(GEdge.SPLICE_RETURN, None))
        for node in pcs.nodes:
            graph.add_node(spliced.node(node.id))
        for edge in pcs.edges:
            graph.add_edge(spliced.node(edge.source), spliced.node(edge.target), key=(GEdge.SUMMARY, edge.label))

        for node in pcs.of_kind(NodeKind.CALLBACK):
            receivers = node.callback.receivers if node.callback else ()
            if all(receiver.kind not in (THIS_KIND, PARAM_KIND) for receiver in receivers):
                message = f"Callback {node.location} of {api} at {site} has an unknown receiver"
                self.g.diagnostics.append(warning(message))
                logger.warning("Skipping callback with unknown receiver", extra={"api": api, "site": site})
                continue
            impls = resolve_callback_impl(node, self.program, caller, stmt)
            if len(inner) >= self.config.max_chain:
                continue
            for impl in impls:
                entry, exit_ = self.method(impl, inner + (str(node.id),))
                self.g.callback_entries[entry] = impl.qualified_name
                self.g.impl_targets.add(impl.key)
                spliced.impl_edges += 1
                graph.add_edge(spliced.node(node.id), entry, key=(GEdge.IMPL_CALL, None))
                for edge in pcs.successors(node.id):
                    graph.add_edge(exit_, spliced.node(edge.target), key=(GEdge.IMPL_RETURN, None))


def build_inter_callback_icfg(
    program: Program, store: SummaryStore, top: MethodDef, config: Optional[AnalysisConfig] = None
) -> InterCallbackICFG:
    """App ICFG of ``top`` with summaries spliced at API calls and callback implementations attached."""

    if not program.is_app(top.owner) or not top.has_body:
        raise PreconditionError(f"{top.key} is not an app method with a body")
    graph = InterCallbackICFG(top=top, graph=nx.MultiDiGraph(top=top.key))
    builder = _Builder(program, store, config or AnalysisConfig(), graph)
    entry, _ = builder.method(top, ())
    graph.callback_entries[entry] = top.qualified_name
    logger.debug(
        "Built inter-callback ICFG",
        extra={"top": top.key, "nodes": len(graph), "spliced": len(graph.spliced)},
    )
    return graph


def overridden_callbacks(program: Program, method: MethodDef) -> list[CallbackSignature]:
    signatures = callback_signatures(program)
    found = []
    for name in program.supertypes(method.owner)[1:]:
        candidate = CallbackSignature(name, method.name, method.arity)
        if candidate in signatures:
            found.append(candidate)
    return found


def top_level_methods(
    program: Program, store: SummaryStore, config: Optional[AnalysisConfig] = None
) -> list[MethodDef]:
    """App callback overrides that no analyzed summary calls back into."""

    candidates = [
        method
        for method in program.methods()
        if program.is_app(method.owner) and method.has_body and overridden_callbacks(program, method)
    ]
    targeted: set[str] = set()
    for method in candidates:
        targeted |= build_inter_callback_icfg(program, store, method, config).impl_targets
    return [method for method in candidates if method.key not in targeted]


@dataclass(frozen=True, slots=True)
class CallbackPaths:
    sequences: list[tuple[str, ...]]
    longest: int
    truncated: bool = False


def enumerate_callback_paths(
    g: InterCallbackICFG, bound: int = 1000, *, excluded: Iterable[tuple[GNode, GNode, tuple]] = ()
) -> CallbackPaths:
    """Callback sequences along paths of ``g``; each edge is used at most once per path.

    ``excluded`` edges are skipped, which gives the infeasibility-filtered view.
    """

    if bound < 1:
        raise PreconditionError("bound must be at least 1")
    if all(node == g.entry for node in g.callback_entries):
        return CallbackPaths(sequences=[], longest=0)
    blocked = set(excluded)
    start = (g.callback_entries.get(g.entry, g.top.qualified_name),)
    sequences: list[tuple[str, ...]] = [start]
    known = {start}
    seen: set[tuple[GNode, tuple[str, ...]]] = set()
    stack: list[tuple[GNode, tuple[str, ...], frozenset]] = [(g.entry, start, frozenset())]
    truncated = False

    while stack:
        node, sequence, used = stack.pop()
        if (node, sequence) in seen:
            continue
        seen.add((node, sequence))
        for edge in reversed(g.out_edges(node)):
            if edge in used or edge in blocked:
                continue
            target = edge[1]
            extended = sequence
            if target in g.callback_entries and target != g.entry:
                extended = sequence + (g.callback_entries[target],)
                if extended not in known:
                    if len(sequences) >= bound:
                        truncated = True
                        continue
                    known.add(extended)
                    sequences.append(extended)
            stack.append((target, extended, used | {edge}))

    longest = max(len(sequence) for sequence in sequences)
    return CallbackPaths(sequences=sorted(sequences), longest=longest, truncated=truncated)


# Query values are constants; these two stand for what a template update guarantees.
NONNULL_VALUE = Const(NONNULL, None)
POSITIVE_VALUE = Const(POSITIVE, None)

VarKey = tuple[str, object, tuple[str, ...]]


@dataclass(frozen=True, slots=True)
class InfeasibleReport:
    predicate: GNode
    branch: str
    call_site: str
    outcome: bool
    expression: str
    witness: tuple[GNode, ...]
    resolver: GNode

    def to_json(self) -> dict[str, object]:
        return {
            "predicate": str(self.predicate),
            "branch": self.branch,
            "call_site": self.call_site,
            "outcome": "true" if self.outcome else "false",
            "expression": self.expression,
            "witness": [str(node) for node in self.witness],
            "resolver": str(self.resolver),
        }


class _Killed(Exception):
    """The queried variable may be changed in an unknown way."""


@dataclass(slots=True)
class Resolution:
    """Values a query variable may hold at a node, keyed by the node that fixes each one."""

    values: dict[GNode, set[Const]]
    parents: dict[GNode, GNode]

    def distinct(self) -> set[Const]:
        return {value for found in self.values.values() for value in found}

    def witness(self, start: GNode, resolver: GNode) -> tuple[GNode, ...]:
        path = [resolver]
        while path[-1] != start:
            path.append(self.parents[path[-1]])
        return tuple(path)


class BranchCorrelation:
    """Demand-driven backward queries over one inter-callback ICFG."""

    def __init__(self, g: InterCallbackICFG, program: Program, budget: int = 10_000) -> None:
        self.g = g
        self.program = program
        self.budget = budget
        self._memo: dict[tuple[GNode, VarKey], Optional[Resolution]] = {}

    def identity(self, context: tuple[str, ...], method: MethodDef, operand: Operand) -> Optional[object]:
        """Object identity of an operand: its copy-root local, or a string constant."""

        if isinstance(operand, Const):
            return ("const", operand.value) if operand.kind == "string" else None
        name = operand.name
        visited = {name}
        while True:
            definitions = [stmt for stmt in method.body if stmt.defined_local() == name]
            if len(definitions) != 1 or not isinstance(definitions[0], Assign):
                break
            value = definitions[0].value
            if isinstance(value, Const):
                return ("const", value.value) if value.kind == "string" else None
            if value.name in visited:
                break
            visited.add(value.name)
            name = value.name
        return ("local", context, method.key, name)

    def variable_key(self, variable: AbstractVariable, spliced: SplicedCall) -> Optional[VarKey]:
        if variable.scope is Scope.STATIC:
            return ("static", variable.class_type, variable.path)
        app_context = spliced.call.context
        if variable.scope is Scope.CALLING_OBJECT:
            ident = self.identity(app_context, spliced.caller, Local(spliced.stmt.base))
        elif 0 <= variable.index < len(spliced.stmt.args):
            ident = self.identity(app_context, spliced.caller, spliced.stmt.args[variable.index])
        else:
            return None
        return None if ident is None else ("obj", ident, variable.path)

    def _effect(self, node: GNode, key: VarKey) -> Optional[Const]:
        """Value ``node`` gives the queried variable, None when unaffected; raises when unknown."""

        if node.kind == SUMMARY:
            spliced = self.g.spliced[node.context]
            pcs_node = spliced.pcs.node(node.index)
            if pcs_node.kind is NodeKind.UPDATE:
                for update in pcs_node.updates:
                    value = self._update_effect(update, self.variable_key(update.target, spliced), key)
                    if value is not None:
                        return value
            return None

        if node in self.g.pass_through:
            raise _Killed
        if node.index < 0:
            return None
        method = self.program.method(node.owner)
        stmt = method.body[node.index] if method is not None else None
        if isinstance(stmt, StaticStore):
            return _store_effect(("static", stmt.owner, (stmt.field_name,)), stmt.value, key)
        if isinstance(stmt, FieldStore) and key[0] == "obj":
            ident = self.identity(node.context, method, Local(stmt.base))
            return _store_effect(("obj", ident, (stmt.field_name,)), stmt.value, key)
        return None

    def _update_effect(self, update: UpdateNode, target: Optional[VarKey], key: VarKey) -> Optional[Const]:
        if target is None or target[:2] != key[:2]:
            return None
        path, wanted = target[2], key[2]
        if wanted[: len(path)] != path:
            return None
        if len(path) < len(wanted):
            raise _Killed
        effect = update.effect
        if effect.kind is EffectKind.ASSIGN_CONST and effect.value is not None:
            return effect.value
        if effect.kind is EffectKind.TEMPLATE and is_insertion(effect.method):
            value = predicate_after_insertion(path[-1][:-2]) if path else None
            if isinstance(value, bool):
                return Const.of(value)
            if value == NONNULL:
                return NONNULL_VALUE
            if value == POSITIVE:
                return POSITIVE_VALUE
        raise _Killed

    def _edge_fact(self, source: GNode, target: GNode, key: VarKey) -> Optional[Const]:
        """Value implied for ``key`` by taking a labeled summary edge out of a single-term predicate."""

        pcs_node = self.g.pcs_node(source)
        if pcs_node is None or pcs_node.kind is not NodeKind.PREDICATE or pcs_node.expression is None:
            return None
        expression = pcs_node.expression
        if expression.unresolved or len(expression.terms) != 1:
            return None
        labels = {label for kind, label in self.g.graph.get_edge_data(source, target) if kind == GEdge.SUMMARY}
        if len(labels) != 1:
            return None
        term = expression.terms[0]
        variable, constant = term.left, term.right
        if isinstance(variable, Const):
            variable, constant = constant, variable
        if not isinstance(variable, AbstractVariable) or not isinstance(constant, Const):
            return None
        if self.variable_key(variable, self.g.spliced[source.context]) != key:
            return None
        if term.op not in ("==", "!="):
            return None
        holds = (labels.pop() == "true") == (term.op == "==")
        if holds:
            return constant
        if constant.kind == "null":
            return NONNULL_VALUE
        if constant.kind == "bool":
            return Const.of(not constant.value)
        return None

    def resolve(self, start: GNode, key: VarKey) -> Optional[Resolution]:
        """Values reaching ``start`` for ``key`` along every backward path, or None when unresolved."""

        memo_key = (start, key)
        if memo_key in self._memo:
            return self._memo[memo_key]
        resolution: Optional[Resolution] = Resolution(values={}, parents={})
        queue = deque([start])
        visited = {start}
        steps = 0
        while queue and resolution is not None:
            node = queue.popleft()
            steps += 1
            if steps > self.budget:
                logger.warning("Correlation query budget exhausted", extra={"predicate": str(start)})
                resolution = None
                break
            if node == self.g.entry:
                resolution = None
                break
            for pred in self.g.predecessors(node):
                fact = self._edge_fact(pred, node, key)
                if fact is not None:
                    resolution.parents.setdefault(pred, node)
                    resolution.values.setdefault(pred, set()).add(fact)
                    continue
                if pred in visited:
                    continue
                visited.add(pred)
                resolution.parents.setdefault(pred, node)
                try:
                    value = self._effect(pred, key)
                except _Killed:
                    resolution = None
                    break
                if value is not None:
                    resolution.values.setdefault(pred, set()).add(value)
                else:
                    queue.append(pred)
        if resolution is not None and not resolution.values:
            resolution = None
        self._memo[memo_key] = resolution
        return resolution

    def evaluate(self, start: GNode, spliced: SplicedCall, term: Term) -> Optional[tuple[bool, tuple[GNode, ...]]]:
        """Truth value of ``term`` at ``start`` when every backward path agrees, plus a witness."""

        values: list[Const] = []
        witness: Optional[tuple[GNode, ...]] = None
        for operand in (term.left, term.right):
            if isinstance(operand, Const):
                values.append(operand)
                continue
            if isinstance(operand, Arithmetic):
                return None
            key = self.variable_key(operand, spliced)
            resolution = self.resolve(start, key) if key is not None else None
            if resolution is None:
                return None
            found = resolution.distinct()
            if len(found) != 1:
                return None
            values.append(found.pop())
            witness = witness or resolution.witness(start, min(resolution.values))
        truth = compare(term.op, values[0], values[1])
        if truth is None or witness is None:
            return None
        return truth, witness


def compare(op: str, left: Const, right: Const) -> Optional[bool]:
    """Evaluate ``left op right`` on constants and template guarantees; None when unknown."""

    for marker, other, flipped in ((left, right, False), (right, left, True)):
        if marker.kind == NONNULL:
            if other.kind != "null":
                return None
            return {"==": False, "!=": True}.get(op)
        if marker.kind == POSITIVE:
            if other.kind != "int" or other.value != 0:
                return None
            table = {"==": False, "!=": True, ">": True, ">=": True, "<": False, "<=": False}
            if flipped:
                table = {"==": False, "!=": True, ">": False, ">=": False, "<": True, "<=": True}
            return table.get(op)
    if op == "==":
        return left == right
    if op == "!=":
        return left != right
    if left.kind != "int" or right.kind != "int":
        return None
    a, b = left.value, right.value
    return {"<": a < b, ">": a > b, "<=": a <= b, ">=": a >= b}.get(op)


def detect_infeasible_paths(
    g: InterCallbackICFG, program: Program, *, budget: int = 10_000
) -> list[InfeasibleReport]:
    """Predicate outcomes that earlier updates or branches on every path make impossible."""

    correlation = BranchCorrelation(g, program, budget)
    reports = []
    for context in sorted(g.spliced):
        spliced = g.spliced[context]
        for pcs_node in spliced.pcs.of_kind(NodeKind.PREDICATE):
            expression = pcs_node.expression
            if expression is None or expression.unresolved or not expression.terms:
                continue
            start = spliced.node(pcs_node.id)
            evaluations = [correlation.evaluate(start, spliced, term) for term in expression.terms]
            if any(item is None for item in evaluations):
                continue
            truths = {item[0] for item in evaluations}
            if len(truths) != 1:
                continue
            truth = truths.pop()
            witness = evaluations[0][1]
            labels = sorted({edge.label for edge in spliced.pcs.successors(pcs_node.id) if edge.label})
            for label in labels:
                outcome = label == "true"
                if outcome == truth:
                    continue
                report = InfeasibleReport(
                    predicate=start,
                    branch=pcs_node.origin or "",
                    call_site=spliced.site,
                    outcome=outcome,
                    expression=str(expression),
                    witness=witness,
                    resolver=witness[0],
                )
                logger.info("Infeasible branch outcome", extra={"branch": report.branch, "site": report.call_site})
                reports.append(report)
    return reports


def infeasible_edges(g: InterCallbackICFG, reports: Iterable[InfeasibleReport]) -> set[tuple[GNode, GNode, tuple]]:
    """Summary edges leaving each reported predicate with the contradicted outcome."""

    blocked = set()
    for report in reports:
        label = "true" if report.outcome else "false"
        for edge in g.out_edges(report.predicate):
            if edge[2] == (GEdge.SUMMARY, label):
                blocked.add(edge)
    return blocked


def _store_effect(target: VarKey, value: Operand, key: VarKey) -> Optional[Const]:
    if target[:2] != key[:2] or key[2][: len(target[2])] != target[2]:
        return None
    if len(target[2]) < len(key[2]) or not isinstance(value, Const):
        raise _Killed
    return value


@dataclass(slots=True)
class TopLevelResult:
    """Everything the client analysis reports for one top-level method."""

    top: MethodDef
    graph: InterCallbackICFG
    paths: CallbackPaths
    filtered: CallbackPaths
    reports: list[InfeasibleReport]

    @property
    def callbacks(self) -> int:
        return len({name for node, name in self.graph.callback_entries.items() if node != self.graph.entry})

    @property
    def api_calls(self) -> int:
        return len(self.graph.spliced)

    def impl_edge_counts(self) -> list[int]:
        return [self.graph.spliced[key].impl_edges for key in sorted(self.graph.spliced)]

    def impl_edge_summary(self) -> tuple[int, float, int]:
        counts = self.impl_edge_counts()
        if not counts:
            return (0, 0.0, 0)
        return (min(counts), round(mean(counts), 2), max(counts))


def apply_summaries(
    program: Program,
    store: SummaryStore,
    config: Optional[AnalysisConfig] = None,
    *,
    tops: Optional[Iterable[str]] = None,
    infeasible: bool = True,
) -> list[TopLevelResult]:
    """Run the client analysis for each top-level method (or the named ones)."""

    config = config or AnalysisConfig()
    methods = top_level_methods(program, store, config)
    if tops:
        wanted = list(tops)
        methods = [method for method in methods if method.key in wanted or method.qualified_name in wanted]

    def run(method: MethodDef) -> TopLevelResult:
        graph = build_inter_callback_icfg(program, store, method, config)
        reports = detect_infeasible_paths(graph, program, budget=config.query_budget) if infeasible else []
        paths = enumerate_callback_paths(graph, config.path_bound)
        filtered = enumerate_callback_paths(graph, config.path_bound, excluded=infeasible_edges(graph, reports))
        logger.info(
            "Applied summaries",
            extra={"top": method.key, "spliced": len(graph.spliced), "reports": len(reports)},
        )
        return TopLevelResult(top=method, graph=graph, paths=paths, filtered=filtered, reports=reports)

    return map_jobs(config.jobs, run, methods)

