"""Callback signatures, callback call sites, call chains and Handler message linking."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Optional

from minifw.hierarchy import resolve_dispatch
from minifw.model import CallKind, ClassDef, Invoke, MethodDef, Program, Signature, Visibility
from pcs_core.errors import Diagnostic, PreconditionError, warning

from .graphs import ICFG, CallEdge, CallGraph, EdgeKind, IcfgNode, build_icfg

logger = logging.getLogger(__name__)

HANDLER_CLASS = "Handler"
SEND_MESSAGE = Signature("sendMessage", 1)
HANDLE_MESSAGE = Signature("handleMessage", 1)


@dataclass(frozen=True, slots=True, order=True)
class CallbackSignature:
    owner: str
    name: str
    arity: int

    @property
    def signature(self) -> Signature:
        return Signature(self.name, self.arity)

    def __str__(self) -> str:
        return f"{self.owner}.{self.name}/{self.arity}"

    def to_json(self) -> dict[str, object]:
        return {"owner": self.owner, "name": self.name, "arity": self.arity}

    @classmethod
    def from_json(cls, data: dict) -> "CallbackSignature":
        return cls(str(data["owner"]), str(data["name"]), int(data["arity"]))


@dataclass(frozen=True, slots=True, order=True)
class CallSite:
    method: str
    sid: int

    @property
    def node(self) -> IcfgNode:
        return (self.method, self.sid)

    def __str__(self) -> str:
        return f"{self.method}#{self.sid}"


@dataclass(frozen=True, slots=True, order=True)
class CallChain:
    """Methods m0..mn from an API method down to the method holding a callback call site.

    ``sites[i]`` is the statement of ``methods[i]`` that calls ``methods[i + 1]``;
    the last entry is the callback call site itself.
    """

    methods: tuple[str, ...]
    sites: tuple[int, ...]
    async_hops: frozenset[int] = frozenset()

    @property
    def api(self) -> str:
        return self.methods[0]

    @property
    def is_async(self) -> bool:
        return bool(self.async_hops)

    def __len__(self) -> int:
        return len(self.methods)

    def prefix(self, length: int) -> "CallChain":
        """The first ``length`` methods, ending at the call site of the next hop."""

        hops = frozenset(hop for hop in self.async_hops if hop < length - 1)
        return CallChain(self.methods[:length], self.sites[:length], hops)


@dataclass(slots=True)
class CallSiteSet:
    sites: list[CallSite] = field(default_factory=list)
    signatures: dict[CallSite, CallbackSignature] = field(default_factory=dict)
    chains: dict[CallSite, list[CallChain]] = field(default_factory=dict)

    def for_api(self, api: str) -> dict[CallSite, list[CallChain]]:
        """Call sites reachable from ``api`` with the chains rooted there."""

        selected: dict[CallSite, list[CallChain]] = {}
        for site in self.sites:
            rooted = [chain for chain in self.chains.get(site, []) if chain.api == api]
            if rooted:
                selected[site] = rooted
        return selected

    def nodes(self) -> frozenset[IcfgNode]:
        return frozenset(site.node for site in self.sites)


def _is_callback_class(decl: ClassDef) -> bool:
    if decl.builtin:
        return False
    if decl.is_interface:
        return decl.is_public
    return not decl.is_final


def _is_callback_method(decl: ClassDef, method: MethodDef) -> bool:
    if method.is_static or method.is_final or method.is_api:
        return False
    if decl.is_interface:
        return True
    return method.visibility in (Visibility.PUBLIC, Visibility.PROTECTED)


def callback_signatures(program: Program) -> frozenset[CallbackSignature]:
    """Framework methods the app may override and the framework may call back."""

    found = set()
    for decl in program.declarations():
        if not program.is_framework(decl.name) or not _is_callback_class(decl):
            continue
        for method in decl.methods:
            if _is_callback_method(decl, method):
                found.add(CallbackSignature(decl.name, method.name, method.arity))
    return frozenset(found)


def match_callback(
    program: Program, method: MethodDef, stmt: Invoke, signatures: frozenset[CallbackSignature]
) -> Optional[CallbackSignature]:
    """Return the callback signature a virtual call site dispatches through, if any."""

    if stmt.call_kind is not CallKind.VIRTUAL:
        return None
    declared = method.local_type(stmt.base)
    if declared is None:
        return None
    signature = Signature(stmt.method, stmt.arity)
    for name in program.supertypes(declared):
        candidate = CallbackSignature(name, signature.name, signature.arity)
        if candidate in signatures:
            return candidate
    return None


def callback_call_sites(
    program: Program, signatures: frozenset[CallbackSignature]
) -> dict[CallSite, CallbackSignature]:
    """Every framework call site dispatching through a callback signature."""

    sites: dict[CallSite, CallbackSignature] = {}
    for method in program.methods():
        if not program.is_framework(method.owner) or not method.has_body:
            continue
        for stmt in method.body:
            if not isinstance(stmt, Invoke):
                continue
            matched = match_callback(program, method, stmt, signatures)
            if matched is not None:
                sites[CallSite(method.key, stmt.sid)] = matched
    return sites


def find_call_chains(
    program: Program,
    cg: CallGraph,
    signatures: frozenset[CallbackSignature],
    max_len: int = 16,
    max_callers: int = 5,
    seed: int = 0,
) -> CallSiteSet:
    """Walk the call graph backwards from each callback call site to API methods.

    At most ``max_callers`` callers are explored per step, picked by a random
    generator seeded from ``seed`` and the step itself. Chains never pass through
    another callback call site and never revisit a method.
    """

    if max_len < 1 or max_callers < 1:
        raise PreconditionError("max_len and max_callers must be at least 1")

    matched = callback_call_sites(program, signatures)
    callback_nodes = {site.node for site in matched}
    result = CallSiteSet(sites=sorted(matched), signatures=matched)

    for site in result.sites:
        chains: set[CallChain] = set()
        # Paths are stored leaf first: (methods, sites, async flags per hop).
        pending: list[tuple[tuple[str, ...], tuple[int, ...], tuple[bool, ...]]] = [
            ((site.method,), (site.sid,), ())
        ]
        while pending:
            methods, sites, hops = pending.pop()
            head = program.method(methods[-1])
            if head is not None and head.is_api:
                chains.add(_as_chain(methods, sites, hops))
            if len(methods) >= max_len:
                continue
            callers = [
                edge
                for edge in cg.callers(methods[-1])
                if edge.caller not in methods and (edge.caller, edge.site) not in callback_nodes
            ]
            for edge in _sample(callers, max_callers, seed, site, methods[-1]):
                pending.append((methods + (edge.caller,), sites + (edge.site,), hops + (edge.is_async,)))
        result.chains[site] = sorted(chains)
        logger.debug("Call chains", extra={"site": str(site), "chains": len(chains)})
    return result


def _as_chain(methods: tuple[str, ...], sites: tuple[int, ...], hops: tuple[bool, ...]) -> CallChain:
    ordered_methods = tuple(reversed(methods))
    ordered_sites = tuple(reversed(sites))
    count = len(hops)
    async_hops = frozenset(count - 1 - index for index, is_async in enumerate(hops) if is_async)
    return CallChain(ordered_methods, ordered_sites, async_hops)


def _sample(edges: list[CallEdge], limit: int, seed: int, site: CallSite, method: str) -> list[CallEdge]:
    if len(edges) <= limit:
        return edges
    picker = random.Random(f"{seed}|{site}|{method}")
    return sorted(picker.sample(edges, limit))


@dataclass(slots=True)
class AsyncLinkResult:
    call_graph: CallGraph
    icfg: Optional[ICFG] = None
    edges: list[CallEdge] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)


def link_async_handlers(program: Program, cg: CallGraph, icfg: Optional[ICFG] = None) -> AsyncLinkResult:
    """Add implicit ``sendMessage`` to ``handleMessage`` edges for Handler subclasses.

    The receiver class is the declared type of the ``sendMessage`` base local.
    When ``icfg`` is given it is rebuilt over the augmented call graph.
    """

    linked = cg.copy()
    result = AsyncLinkResult(call_graph=linked)
    for method in program.methods():
        for stmt in method.body:
            if not _is_send_message(program, method, stmt):
                continue
            declared = method.local_type(stmt.base)
            handler = resolve_dispatch(program, declared, HANDLE_MESSAGE)
            if handler is None:
                message = f"{declared} has no handleMessage for sendMessage in {method.key}"
                result.diagnostics.append(warning(message, line=stmt.line, column=stmt.column))
                logger.warning("No handleMessage for sendMessage", extra={"caller": method.key, "receiver": declared})
                continue
            edge = CallEdge(method.key, stmt.sid, handler.key, EdgeKind.ASYNC_CALL)
            linked.add_edge(edge)
            result.edges.append(edge)

    if icfg is not None:
        result.icfg = build_icfg(program, icfg.root, linked, max_depth=icfg.max_depth, skip=icfg.skip)
    logger.debug("Linked async handlers", extra={"edges": len(result.edges)})
    return result


def _is_send_message(program: Program, method: MethodDef, stmt: object) -> bool:
    if not isinstance(stmt, Invoke) or stmt.call_kind is not CallKind.VIRTUAL:
        return False
    if Signature(stmt.method, stmt.arity) != SEND_MESSAGE:
        return False
    declared = method.local_type(stmt.base)
    return declared is not None and program.is_subtype(declared, HANDLER_CLASS)


def chain_is_linked(cg: CallGraph, chain: CallChain) -> bool:
    """Check that every hop of ``chain`` is an edge of ``cg``."""

    for index in range(len(chain.methods) - 1):
        caller, callee, site = chain.methods[index], chain.methods[index + 1], chain.sites[index]
        if not any(edge.callee == callee for edge in cg.callees(caller, site)):
            return False
    return True
