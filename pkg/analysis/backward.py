"""Demand-driven backward substitution of symbolic values over method CFGs.

Values start as locals at some statement and are pushed backwards through
assignments, field loads and call results until they are rooted at the
calling object, a parameter or a static field of the root API method.
Each CFG edge is used at most once per path, so loops are unrolled once.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Sequence, Union

from minifw.model import (
    THIS,
    Assign,
    BinaryOp,
    CallKind,
    Const,
    FieldLoad,
    FieldStore,
    Invoke,
    Local,
    MethodDef,
    New,
    Operand,
    StaticLoad,
    StaticStore,
    Stmt,
)

from .graphs import ENTRY, CfgCache

logger = logging.getLogger(__name__)

SUBSTITUTED_OPERATORS = ("+", "-")


class Scope(str, Enum):
    LOCAL = "local"
    CALLING_OBJECT = "calling-object"
    PARAM = "param"
    STATIC = "static"


@dataclass(frozen=True, slots=True, order=True)
class AccessPath:
    """Base reference plus field and call tokens; a call token looks like ``get()``."""

    scope: Scope
    root: str = ""
    index: int = -1
    chain: tuple[str, ...] = ()

    @classmethod
    def local(cls, name: str, chain: tuple[str, ...] = ()) -> "AccessPath":
        return cls(Scope.LOCAL, name, -1, chain)

    @classmethod
    def static(cls, owner: str, chain: tuple[str, ...]) -> "AccessPath":
        return cls(Scope.STATIC, owner, -1, chain)

    def __str__(self) -> str:
        match self.scope:
            case Scope.CALLING_OBJECT:
                head = THIS
            case Scope.PARAM:
                head = f"param({self.index})"
            case _:
                head = self.root
        return ".".join((head, *self.chain))


@dataclass(frozen=True, slots=True)
class Arith:
    op: str
    left: "Value"
    right: "Value"

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True, slots=True)
class Unresolved:
    def __str__(self) -> str:
        return "?"


UNRESOLVED = Unresolved()

Value = Union[AccessPath, Const, Arith, Unresolved]
State = tuple[Value, ...]


@dataclass(frozen=True, slots=True)
class CallContext:
    """One way into a method: the caller and the call statement id."""

    caller: str
    site: int
    is_async: bool = False


ContextProvider = Callable[[str], Sequence[CallContext]]


@dataclass(frozen=True, slots=True)
class BackwardResult:
    states: frozenset[State]
    unresolved: bool = False
    exhausted: bool = False


def operand_value(operand: Operand) -> Value:
    if isinstance(operand, Local):
        return AccessPath.local(operand.name)
    return operand


def rebase(value: Value, chain: tuple[str, ...]) -> Value:
    """Append ``chain`` to ``value``; only access paths can carry field tokens."""

    if not chain:
        return value
    if isinstance(value, AccessPath):
        return replace(value, chain=value.chain + chain)
    return UNRESOLVED


def is_closed(value: Value) -> bool:
    """True when no local remains anywhere in ``value``."""

    match value:
        case AccessPath(scope=Scope.LOCAL):
            return False
        case Arith(left=left, right=right):
            return is_closed(left) and is_closed(right)
    return True


def is_unresolved(value: Value) -> bool:
    match value:
        case Unresolved():
            return True
        case Arith(left=left, right=right):
            return is_unresolved(left) or is_unresolved(right)
    return False


def access_paths(value: Value) -> list[AccessPath]:
    match value:
        case AccessPath():
            return [value]
        case Arith(left=left, right=right):
            return access_paths(left) + access_paths(right)
    return []


def _depth(value: Value) -> int:
    if isinstance(value, Arith):
        return 1 + max(_depth(value.left), _depth(value.right))
    return 0


def transfer(stmt: Stmt, value: Value) -> Value:
    """Value before ``stmt`` given the value after it."""

    match value:
        case Arith(op=op, left=left, right=right):
            return Arith(op, transfer(stmt, left), transfer(stmt, right))
        case AccessPath(scope=Scope.LOCAL):
            return _transfer_local(stmt, value)
        case AccessPath(scope=Scope.STATIC, root=owner, chain=chain):
            if isinstance(stmt, StaticStore) and stmt.owner == owner and chain[:1] == (stmt.field_name,):
                return rebase(operand_value(stmt.value), chain[1:])
    return value


def _transfer_local(stmt: Stmt, path: AccessPath) -> Value:
    name, chain = path.root, path.chain
    if isinstance(stmt, FieldStore):
        if stmt.base == name and chain[:1] == (stmt.field_name,):
            return rebase(operand_value(stmt.value), chain[1:])
        return path
    if stmt.defined_local() != name:
        return path

    match stmt:
        case Assign(value=operand):
            return rebase(operand_value(operand), chain)
        case FieldLoad(base=base, field_name=field_name):
            return AccessPath.local(base, (field_name,) + chain)
        case StaticLoad(owner=owner, field_name=field_name):
            return AccessPath.static(owner, (field_name,) + chain)
        case Invoke(call_kind=CallKind.STATIC):
            return UNRESOLVED
        case Invoke(base=base, method=method):
            return AccessPath.local(base, (f"{method}()",) + chain)
        case BinaryOp(op=op, left=left, right=right) if not chain and op in SUBSTITUTED_OPERATORS:
            return Arith(op, operand_value(left), operand_value(right))
        case New():
            return UNRESOLVED
    return UNRESOLVED


def map_into_caller(value: Value, callee: MethodDef, call: Invoke) -> Value:
    """Rewrite callee-entry locals in terms of the caller's operands at ``call``."""

    match value:
        case Arith(op=op, left=left, right=right):
            return Arith(op, map_into_caller(left, callee, call), map_into_caller(right, callee, call))
        case AccessPath(scope=Scope.LOCAL, root=name, chain=chain):
            if name == THIS:
                if call.call_kind is CallKind.STATIC:
                    return UNRESOLVED
                return AccessPath.local(call.base, chain)
            index = callee.param_index(name)
            if index is None or index >= len(call.args):
                return UNRESOLVED
            return rebase(operand_value(call.args[index]), chain)
    return value


def map_to_root(value: Value, root: MethodDef) -> Value:
    """Rewrite entry locals of the root method as calling-object or parameter paths."""

    match value:
        case Arith(op=op, left=left, right=right):
            return Arith(op, map_to_root(left, root), map_to_root(right, root))
        case AccessPath(scope=Scope.LOCAL, root=name, chain=chain):
            if name == THIS and not root.is_static:
                return AccessPath(Scope.CALLING_OBJECT, "", -1, chain)
            index = root.param_index(name)
            if index is None:
                return UNRESOLVED
            return AccessPath(Scope.PARAM, "", index, chain)
    return value


class BackwardSubstitution:
    """Backward propagation engine shared by receiver, predicate and update resolution."""

    def __init__(
        self,
        cfgs: CfgCache,
        root: MethodDef,
        contexts: ContextProvider,
        *,
        limit: int = 5,
        budget: int = 10_000,
        prune: Optional[Callable[[State], bool]] = None,
    ) -> None:
        self.cfgs = cfgs
        self.root = root
        self.contexts = contexts
        self.limit = limit
        self.budget = budget
        self.prune = prune

    def run(self, method_key: str, node: int, state: State) -> BackwardResult:
        """Propagate ``state``, which holds just before statement ``node``, back to the root."""

        found: set[State] = set()
        unresolved = False
        exhausted = False
        seen: set[tuple[str, int, State]] = set()
        stack: list[tuple[str, int, State, frozenset]] = [(method_key, node, state, frozenset())]
        steps = 0

        while stack:
            key, current, values, used = stack.pop()
            if any(is_unresolved(value) for value in values):
                unresolved = True
                continue
            if self.prune is not None and self.prune(values):
                continue
            if all(is_closed(value) for value in values):
                found.add(values)
                continue
            marker = (key, current, values)
            if marker in seen:
                continue
            seen.add(marker)
            steps += 1
            if steps > self.budget:
                exhausted = unresolved = True
                logger.debug("Backward substitution budget exhausted", extra={"root": self.root.key})
                break

            cfg = self.cfgs[key]
            for pred, _ in cfg.predecessors(current):
                edge = (key, pred, current)
                if edge in used:
                    continue
                if pred != ENTRY:
                    stmt = cfg.stmt(pred)
                    stack.append((key, pred, self._bounded(transfer(stmt, v) for v in values), used | {edge}))
                elif key == self.root.key:
                    stack.append((key, ENTRY, tuple(map_to_root(v, self.root) for v in values), used | {edge}))
                else:
                    entered = self._enter_callers(key, values, used | {edge})
                    if not entered:
                        unresolved = True
                    stack.extend(entered)

        return BackwardResult(states=frozenset(found), unresolved=unresolved, exhausted=exhausted)

    def _enter_callers(self, key: str, values: State, used: frozenset) -> list[tuple[str, int, State, frozenset]]:
        program = self.cfgs.program
        callee = program.method(key)
        pending = []
        for context in self.contexts(key):
            hop = ("call", context.caller, context.site, key)
            if hop in used:
                continue
            caller = program.method(context.caller)
            if caller is None or callee is None:  # pragma: no cover - defensive guard
                continue
            call = caller.body[context.site]
            if not isinstance(call, Invoke):  # pragma: no cover - defensive guard
                continue
            mapped = tuple(map_into_caller(value, callee, call) for value in values)
            pending.append((context.caller, context.site, self._bounded(mapped), used | {hop}))
        return pending

    def _bounded(self, values) -> State:
        bounded = []
        for value in values:
            if any(len(path.chain) > self.limit for path in access_paths(value)) or _depth(value) > self.limit:
                bounded.append(UNRESOLVED)
            else:
                bounded.append(value)
        return tuple(bounded)
