"""Object receiver resolution for callback call sites."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

from minifw.model import Invoke
from pcs_core.errors import PreconditionError

from .backward import AccessPath, BackwardSubstitution, CallContext, ContextProvider, Scope
from .callbacks import CallChain, CallSite
from .graphs import CfgCache

logger = logging.getLogger(__name__)

THIS_KIND = "this"
PARAM_KIND = "param"
UNKNOWN_KIND = "unknown"


@dataclass(frozen=True, slots=True, order=True)
class ReceiverSpec:
    """``this``, ``param(i)`` with an optional field path, or ``unknown``."""

    kind: str
    index: int = -1
    path: tuple[str, ...] = ()

    def __str__(self) -> str:
        if self.kind == PARAM_KIND:
            return ".".join((f"param({self.index})", *self.path))
        return self.kind

    def to_json(self) -> dict[str, object]:
        return {"kind": self.kind, "index": self.index, "path": list(self.path)}

    @classmethod
    def from_json(cls, data: dict) -> "ReceiverSpec":
        return cls(str(data["kind"]), int(data.get("index", -1)), tuple(data.get("path", ())))


THIS_RECEIVER = ReceiverSpec(THIS_KIND)
UNKNOWN_RECEIVER = ReceiverSpec(UNKNOWN_KIND)


@dataclass(frozen=True, slots=True)
class ReceiverResolution:
    site: CallSite
    chain: CallChain
    receivers: frozenset[ReceiverSpec]


def chain_contexts(chain: CallChain) -> ContextProvider:
    """Each method of ``chain`` is entered only from its predecessor in the chain."""

    table = {
        chain.methods[index + 1]: (CallContext(chain.methods[index], chain.sites[index], index in chain.async_hops),)
        for index in range(len(chain.methods) - 1)
    }
    return lambda key: table.get(key, ())


def backward_alias(
    base: str, chain: CallChain, cfgs: CfgCache, *, limit: int = 5, budget: int = 10_000
) -> tuple[frozenset[AccessPath], bool]:
    """Access paths rooted in the API method that may alias ``base`` at the callback site.

    Returns the closed paths plus a flag telling whether some alias was lost
    (truncated, freshly allocated or untracked).
    """

    program = cfgs.program
    root = program.method(chain.api)
    tail = program.method(chain.methods[-1])
    if root is None or tail is None:
        raise PreconditionError(f"Unknown method in call chain {chain.methods}")
    stmt = tail.body[chain.sites[-1]]
    if not isinstance(stmt, Invoke) or stmt.base != base:
        raise PreconditionError(f"{base} is not the receiver of {tail.key}#{chain.sites[-1]}")

    engine = BackwardSubstitution(cfgs, root, chain_contexts(chain), limit=limit, budget=budget)
    result = engine.run(tail.key, stmt.sid, (AccessPath.local(base),))
    paths = frozenset(state[0] for state in result.states if isinstance(state[0], AccessPath))
    lost = result.unresolved or len(paths) < len(result.states)
    return paths, lost


def match_receiver(path: AccessPath) -> Optional[ReceiverSpec]:
    """Map an alias onto ``this`` or a parameter path; other roots are not receivers."""

    if path.scope is Scope.CALLING_OBJECT and not path.chain:
        return THIS_RECEIVER
    if path.scope is Scope.PARAM:
        return ReceiverSpec(PARAM_KIND, path.index, path.chain)
    return None


def normalize(receivers: Iterable[ReceiverSpec]) -> frozenset[ReceiverSpec]:
    """Drop ``unknown`` next to resolved receivers; an empty set becomes ``{unknown}``."""

    resolved = frozenset(item for item in receivers if item.kind != UNKNOWN_KIND)
    return resolved or frozenset({UNKNOWN_RECEIVER})


def resolve_receivers(
    sites: dict[CallSite, list[CallChain]], cfgs: CfgCache, *, limit: int = 5, budget: int = 10_000
) -> list[ReceiverResolution]:
    """Resolve the receiver of every (call site, chain) pair."""

    resolutions = []
    for site, chains in sorted(sites.items()):
        method = cfgs.program.method(site.method)
        stmt = method.body[site.sid] if method is not None else None
        if not isinstance(stmt, Invoke):
            raise PreconditionError(f"{site} is not a call site")
        for chain in chains:
            paths, _ = backward_alias(stmt.base, chain, cfgs, limit=limit, budget=budget)
            receivers = normalize(spec for spec in map(match_receiver, paths) if spec is not None)
            if receivers == {UNKNOWN_RECEIVER}:
                logger.warning("Unresolved callback receiver", extra={"site": str(site), "api": chain.api})
            resolutions.append(ReceiverResolution(site=site, chain=chain, receivers=receivers))
    return resolutions
