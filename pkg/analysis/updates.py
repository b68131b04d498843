"""Update nodes: statements that may change a variable some predicate depends on."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Optional

from minifw.model import CallKind, Const, FieldStore, Invoke, StaticStore
from pcs_core.errors import InvariantViolation

from .backward import AccessPath, BackwardSubstitution, CallContext, ContextProvider, State, access_paths
from .graphs import ICFG, CfgCache, IcfgNode
from .predicates import AbstractVariable, PredicateSet, abstract_value
from .templates import TemplateTable

logger = logging.getLogger(__name__)


class EffectKind(str, Enum):
    ASSIGN_CONST = "assign-const"
    ASSIGN_SYMBOLIC = "assign-symbolic"
    TEMPLATE = "template"


@dataclass(frozen=True, slots=True)
class UpdateEffect:
    kind: EffectKind
    value: Optional[Const] = None
    method: str = ""

    def __str__(self) -> str:
        if self.kind is EffectKind.ASSIGN_CONST:
            return f"= {self.value}"
        if self.kind is EffectKind.TEMPLATE:
            return f"{self.method}(...)"
        return "= <symbolic>"

    def to_json(self) -> dict[str, object]:
        data: dict[str, object] = {"kind": self.kind.value}
        if self.value is not None:
            data["value"] = {"kind": self.value.kind, "value": self.value.value}
        if self.method:
            data["method"] = self.method
        return data

    @classmethod
    def from_json(cls, data: dict) -> "UpdateEffect":
        raw = data.get("value")
        value = Const(str(raw["kind"]), raw["value"]) if raw is not None else None
        return cls(EffectKind(data["kind"]), value, str(data.get("method", "")))


@dataclass(frozen=True, slots=True)
class UpdateNode:
    node: IcfgNode
    target: AbstractVariable
    effect: UpdateEffect

    def __str__(self) -> str:
        return f"{self.target} {self.effect}"

    def to_json(self) -> dict[str, object]:
        return {"target": self.target.to_json(), "effect": self.effect.to_json()}

    @classmethod
    def from_json(cls, data: dict, node: IcfgNode = ("", -1)) -> "UpdateNode":
        return cls(node, AbstractVariable.from_json(data["target"]), UpdateEffect.from_json(data["effect"]))


def collect_pool(predicate_sets: Iterable[PredicateSet]) -> frozenset[AbstractVariable]:
    """Every abstract variable used by any predicate of any summarized API method."""

    return frozenset(variable for predicates in predicate_sets for variable in predicates.variables())


def icfg_contexts(icfg: ICFG) -> ContextProvider:
    def contexts(key: str) -> list[CallContext]:
        return [CallContext(edge.caller, edge.site, edge.is_async) for edge in icfg.callers_of(key)]

    return contexts


def _suffix_filter(suffixes: set[tuple[str, ...]]) -> Callable[[State], bool]:
    """Prune states whose partial access path cannot end any pool path."""

    def prune(state: State) -> bool:
        for value in state:
            for path in access_paths(value):
                if path.chain and path.chain not in suffixes:
                    return True
        return False

    return prune


def _suffixes(paths: Iterable[tuple[str, ...]]) -> set[tuple[str, ...]]:
    return {path[start:] for path in paths for start in range(len(path) + 1)}


def find_update_assignments(
    icfg: ICFG,
    pool: frozenset[AbstractVariable],
    cfgs: CfgCache,
    *,
    limit: int = 5,
    budget: int = 10_000,
    early_exit: bool = True,
) -> list[UpdateNode]:
    """Field and static stores of the ICFG whose destination is a pool variable."""

    if not pool:
        return []
    prune = _suffix_filter(_suffixes(variable.path for variable in pool)) if early_exit else None
    engine = BackwardSubstitution(cfgs, icfg.root, icfg_contexts(icfg), limit=limit, budget=budget, prune=prune)

    found: list[UpdateNode] = []
    for key, cfg in icfg.members.items():
        for stmt in cfg.method.body:
            if stmt.sid in cfg.unreachable:
                continue
            if isinstance(stmt, StaticStore):
                destinations = [AccessPath.static(stmt.owner, (stmt.field_name,))]
            elif isinstance(stmt, FieldStore):
                result = engine.run(key, stmt.sid, (AccessPath.local(stmt.base, (stmt.field_name,)),))
                destinations = [state[0] for state in result.states]
            else:
                continue
            effect = (
                UpdateEffect(EffectKind.ASSIGN_CONST, stmt.value)
                if isinstance(stmt.value, Const)
                else UpdateEffect(EffectKind.ASSIGN_SYMBOLIC)
            )
            for destination in destinations:
                target = abstract_value(destination, icfg.root)
                if isinstance(target, AbstractVariable) and target in pool:
                    found.append(UpdateNode((key, stmt.sid), target, effect))
    return found


def match_update_templates(
    icfg: ICFG,
    pool: frozenset[AbstractVariable],
    cfgs: CfgCache,
    table: TemplateTable,
    *,
    limit: int = 5,
    budget: int = 10_000,
    early_exit: bool = True,
) -> list[UpdateNode]:
    """Collection update calls whose receiver is the base of a pool variable ending in a paired predicate call."""

    candidates = [variable for variable in pool if variable.path and variable.path[-1].endswith("()")]
    if not candidates:
        return []
    prune = _suffix_filter(_suffixes(variable.path[:-1] for variable in candidates)) if early_exit else None
    engine = BackwardSubstitution(cfgs, icfg.root, icfg_contexts(icfg), limit=limit, budget=budget, prune=prune)
    program = icfg.program

    found: list[UpdateNode] = []
    for key, cfg in icfg.members.items():
        for stmt in cfg.method.body:
            if not isinstance(stmt, Invoke) or stmt.call_kind is CallKind.STATIC or stmt.sid in cfg.unreachable:
                continue
            declared = cfg.method.local_type(stmt.base)
            rows = [
                row
                for row in table.rows
                if declared is not None and program.is_subtype(declared, row.class_name) and row.matches_update(stmt.method)
            ]
            if not rows:
                continue
            result = engine.run(key, stmt.sid, (AccessPath.local(stmt.base),))
            bases = [abstract_value(state[0], icfg.root) for state in result.states]
            for base in bases:
                if not isinstance(base, AbstractVariable):
                    continue
                for variable in sorted(candidates):
                    if variable.with_path(variable.path[:-1]) != base:
                        continue
                    token = variable.path[-1][:-2]
                    if any(row.matches_predicate(token) for row in rows):
                        effect = UpdateEffect(EffectKind.TEMPLATE, method=stmt.method)
                        found.append(UpdateNode((key, stmt.sid), variable, effect))
    return found


def check_targets(updates: Iterable[UpdateNode], pool: frozenset[AbstractVariable]) -> None:
    for update in updates:
        if update.target not in pool:
            raise InvariantViolation(f"Update target {update.target} at {update.node} is not a predicate variable")


def find_updates(
    icfg: ICFG,
    pool: frozenset[AbstractVariable],
    cfgs: CfgCache,
    table: TemplateTable,
    *,
    limit: int = 5,
    budget: int = 10_000,
    early_exit: bool = True,
) -> list[UpdateNode]:
    """Assignment and template update nodes of one API method, deduplicated and ordered."""

    options = dict(limit=limit, budget=budget, early_exit=early_exit)
    found = find_update_assignments(icfg, pool, cfgs, **options) + match_update_templates(
        icfg, pool, cfgs, table, **options
    )
    unique = {(item.node, item.target, item.effect): item for item in found}
    ordered = sorted(unique.values(), key=lambda item: (icfg.order(item.node), str(item.target), str(item.effect)))
    check_targets(ordered, pool)
    logger.debug("Update nodes", extra={"api": icfg.root.key, "updates": len(ordered)})
    return ordered
