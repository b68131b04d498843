"""Concrete reference interpreter for MiniFW programs.

Runs top-level app methods one after another on a shared heap, records the
callback methods the framework enters and the outcome of every framework
branch. Handler messages are delivered synchronously at the ``sendMessage``
call, and a string naming a class stands for that class's single instance.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from pydantic import BaseModel, ValidationError

from minifw.hierarchy import resolve_dispatch
from minifw.model import (
    THIS,
    Assign,
    BinaryOp,
    CallKind,
    Const,
    FieldLoad,
    FieldStore,
    Goto,
    IfGoto,
    Invoke,
    Local,
    MethodDef,
    New,
    Operand,
    Program,
    Return,
    Signature,
    StaticLoad,
    StaticStore,
)
from minifw.parser import load_program
from pcs_core.errors import InterpreterError, PcsError

from .callbacks import HANDLE_MESSAGE, HANDLER_CLASS, SEND_MESSAGE

logger = logging.getLogger(__name__)

MAP_CLASSES = ("Map", "ArrayMap", "SparseArray")
MAX_DEPTH = 200


@dataclass(eq=False, slots=True)
class Obj:
    """Heap object; builtin collections keep their contents in ``items``."""

    class_name: str
    fields: dict[str, Any] = field(default_factory=dict)
    items: Any = None

    def __repr__(self) -> str:
        return f"<{self.class_name}@{id(self):x}>"


Value = Union[None, bool, int, str, Obj]


@dataclass(frozen=True, slots=True)
class BranchEvent:
    """One executed framework branch, attributed to the innermost app call into the framework."""

    call_site: Optional[str]
    branch: str
    outcome: bool


@dataclass(frozen=True, slots=True)
class Trace:
    call: str
    callbacks: tuple[str, ...]
    branches: tuple[BranchEvent, ...]


@dataclass(slots=True)
class _Frame:
    method: MethodDef
    env: dict[str, Value]


class Interpreter:
    def __init__(self, program: Program, *, step_budget: int = 100_000) -> None:
        self.program = program
        self.step_budget = step_budget
        self.statics: dict[tuple[str, str], Value] = {}
        self.singletons: dict[str, Obj] = {}
        self._steps = 0
        self._callbacks: list[str] = []
        self._branches: list[BranchEvent] = []
        self._app_sites: list[str] = []

    def instance(self, class_name: str) -> Obj:
        if class_name not in self.singletons:
            self.singletons[class_name] = self.allocate(class_name)
        return self.singletons[class_name]

    def allocate(self, class_name: str) -> Obj:
        obj = Obj(class_name)
        if class_name in MAP_CLASSES:
            obj.items = {}
        elif class_name == "List":
            obj.items = []
        elif class_name == "Set":
            obj.items = set()
        for decl in self.program.superclass_chain(class_name):
            for item in decl.fields:
                if not item.is_static and item.name not in obj.fields:
                    obj.fields[item.name] = self._field_default(item.type)
        return obj

    def _field_default(self, type_name: str) -> Value:
        decl = self.program.lookup(type_name)
        if decl is not None and not decl.is_interface and type_name != HANDLER_CLASS:
            if self.program.is_subtype(type_name, HANDLER_CLASS):
                return self.instance(type_name)
        return _default(type_name)

    def run_top(self, qualified_name: str) -> Trace:
        """Run one top-level app method on the single instance of its class."""

        owner, _, name = qualified_name.rpartition(".")
        decl = self.program.lookup(owner)
        method = next((item for item in decl.methods if item.name == name), None) if decl else None
        if method is None or not method.has_body:
            raise PcsError(f"Unknown top-level method {qualified_name}")
        self._steps = 0
        self._callbacks = [method.qualified_name]
        self._branches = []
        self._app_sites = []
        args = [_default(param.type) for param in method.params]
        self.call(method, None if method.is_static else self.instance(owner), args)
        trace = Trace(qualified_name, tuple(self._callbacks), tuple(self._branches))
        logger.debug("Executed top-level call", extra={"call": qualified_name, "callbacks": len(trace.callbacks)})
        return trace

    def call(self, method: MethodDef, receiver: Optional[Obj], args: list[Value], depth: int = 0) -> Value:
        if depth > MAX_DEPTH:
            raise InterpreterError(f"Call depth exceeded in {method.key}")
        env: dict[str, Value] = {item.name: _default(item.type) for item in method.locals}
        env.update({param.name: value for param, value in zip(method.params, args)})
        if receiver is not None:
            env[THIS] = receiver
        frame = _Frame(method, env)
        labels = method.label_targets()
        framework = self.program.is_framework(method.owner)

        pc = 0
        while pc < len(method.body):
            self._steps += 1
            if self._steps > self.step_budget:
                raise InterpreterError(f"Step budget of {self.step_budget} exhausted in {method.key}")
            stmt = method.body[pc]
            pc += 1
            match stmt:
                case Assign(target=target, value=value):
                    env[target] = self.operand(frame, value)
                case FieldLoad(target=target, base=base, field_name=field_name):
                    env[target] = self._object(frame, base, stmt.sid).fields.get(field_name)
                case StaticLoad(target=target, owner=owner, field_name=field_name):
                    env[target] = self.statics.get((owner, field_name), self._static_default(owner, field_name))
                case FieldStore(base=base, field_name=field_name, value=value):
                    self._object(frame, base, stmt.sid).fields[field_name] = self.operand(frame, value)
                case StaticStore(owner=owner, field_name=field_name, value=value):
                    self.statics[(owner, field_name)] = self.operand(frame, value)
                case New(target=target, class_name=class_name):
                    env[target] = self.allocate(class_name)
                case BinaryOp(target=target, op=op, left=left, right=right):
                    env[target] = _arith(op, self.operand(frame, left), self.operand(frame, right))
                case Invoke():
                    result = self.invoke(frame, stmt, depth)
                    if stmt.target is not None:
                        env[stmt.target] = result
                case IfGoto(left=left, op=op, right=right, label=label):
                    outcome = _compare(op, self.operand(frame, left), self.operand(frame, right))
                    if framework:
                        call_site = self._app_sites[-1] if self._app_sites else None
                        self._branches.append(BranchEvent(call_site, f"{method.key}#{stmt.sid}", outcome))
                    if outcome:
                        pc = labels[label]
                case Goto(label=label):
                    pc = labels[label]
                case Return(value=value):
                    return None if value is None else self.operand(frame, value)
        return None

    def operand(self, frame: _Frame, operand: Operand) -> Value:
        if isinstance(operand, Const):
            return operand.value
        return frame.env.get(operand.name)

    def _object(self, frame: _Frame, name: str, sid: int) -> Obj:
        value = frame.env.get(name)
        if isinstance(value, str) and self.program.lookup(value) is not None:
            return self.instance(value)
        if not isinstance(value, Obj):
            raise InterpreterError(f"Dereference of {value!r} at {frame.method.key}#{sid}")
        return value

    def _static_default(self, owner: str, field_name: str) -> Value:
        type_name = self.program.field_type(owner, field_name)
        return _default(type_name) if type_name else None

    def invoke(self, frame: _Frame, stmt: Invoke, depth: int) -> Value:
        args = [self.operand(frame, item) for item in stmt.args]
        signature = Signature(stmt.method, stmt.arity)
        receiver: Optional[Obj] = None
        if stmt.call_kind is CallKind.STATIC:
            target = resolve_dispatch(self.program, stmt.base, signature)
        else:
            receiver = self._object(frame, stmt.base, stmt.sid)
            if receiver.items is not None:
                return _builtin(receiver, stmt.method, args)
            if stmt.call_kind is CallKind.SPECIAL:
                target = resolve_dispatch(self.program, frame.method.local_type(stmt.base) or receiver.class_name, signature)
            else:
                target = resolve_dispatch(self.program, receiver.class_name, signature)
            if target is None and signature == SEND_MESSAGE and self.program.is_subtype(receiver.class_name, HANDLER_CLASS):
                target = resolve_dispatch(self.program, receiver.class_name, HANDLE_MESSAGE)
        if target is None:
            logger.debug("No concrete target", extra={"method": stmt.method, "site": f"{frame.method.key}#{stmt.sid}"})
            return None

        caller_is_app = self.program.is_app(frame.method.owner)
        callee_is_app = self.program.is_app(target.owner)
        if callee_is_app and not caller_is_app:
            self._callbacks.append(target.qualified_name)
        entering_framework = caller_is_app and not callee_is_app
        if entering_framework:
            self._app_sites.append(f"{frame.method.key}#{stmt.sid}")
        try:
            return self.call(target, receiver, args, depth + 1)
        finally:
            if entering_framework:
                self._app_sites.pop()


def _default(type_name: str) -> Value:
    if type_name == "int":
        return 0
    if type_name == "boolean":
        return False
    return None


def _same(left: Value, right: Value) -> bool:
    if isinstance(left, bool) != isinstance(right, bool):
        return False
    if isinstance(left, Obj) or isinstance(right, Obj):
        return left is right
    return left == right


def _compare(op: str, left: Value, right: Value) -> bool:
    if op == "==":
        return _same(left, right)
    if op == "!=":
        return not _same(left, right)
    if not isinstance(left, int) or not isinstance(right, int):
        raise InterpreterError(f"Cannot order {left!r} and {right!r}")
    return {"<": left < right, ">": left > right, "<=": left <= right, ">=": left >= right}[op]


def _arith(op: str, left: Value, right: Value) -> Value:
    if not isinstance(left, int) or not isinstance(right, int):
        raise InterpreterError(f"Arithmetic on {left!r} and {right!r}")
    if op in ("/", "%") and right == 0:
        raise InterpreterError("Division by zero")
    return {
        "+": lambda: left + right,
        "-": lambda: left - right,
        "*": lambda: left * right,
        "/": lambda: int(left / right),
        "%": lambda: left % right,
    }[op]()


def _key(value: Value) -> Any:
    return ("obj", id(value)) if isinstance(value, Obj) else (type(value).__name__, value)


def _builtin(obj: Obj, method: str, args: list[Value]) -> Value:
    """Collection operations of the builtin classes; unknown operations do nothing."""

    items = obj.items
    if isinstance(items, dict):
        keyed = [_key(item) for item in args]
        match method, len(args):
            case ("get", 1):
                return items.get(keyed[0], (None, None))[1]
            case ("put", 2) | ("setValueAt", 2):
                items[keyed[0]] = (args[0], args[1])
            case ("remove", 1) | ("delete", 1):
                items.pop(keyed[0], None)
            case ("containsKey", 1):
                return keyed[0] in items
            case ("valueAt", 1):
                values = [value for _, value in items.values()]
                return values[args[0]] if isinstance(args[0], int) and 0 <= args[0] < len(values) else None
            case ("isEmpty", 0):
                return not items
            case ("size", 0):
                return len(items)
        return None
    if isinstance(items, list):
        match method, len(args):
            case ("add", 1):
                items.append(args[0])
            case ("get", 1):
                return items[args[0]] if isinstance(args[0], int) and 0 <= args[0] < len(items) else None
            case ("set", 2):
                if isinstance(args[0], int) and 0 <= args[0] < len(items):
                    items[args[0]] = args[1]
            case ("remove", 1):
                matches = [index for index, item in enumerate(items) if _same(item, args[0])]
                if matches:
                    del items[matches[0]]
            case ("contains", 1):
                return any(_same(item, args[0]) for item in items)
            case ("isEmpty", 0):
                return not items
            case ("size", 0):
                return len(items)
        return None
    match method, len(args):
        case ("add", 1):
            items.add(_key(args[0]))
        case ("remove", 1):
            items.discard(_key(args[0]))
        case ("contains", 1):
            return _key(args[0]) in items
        case ("isEmpty", 0):
            return not items
        case ("size", 0):
            return len(items)
    return None


class _ScenarioModel(BaseModel):
    name: str
    calls: list[str]


class _ScenarioFileModel(BaseModel):
    framework: list[str]
    app: list[str]
    scenarios: list[_ScenarioModel]


@dataclass(frozen=True, slots=True)
class Scenario:
    name: str
    calls: tuple[str, ...]


@dataclass(slots=True)
class ScenarioSet:
    program: Program
    scenarios: list[Scenario]
    framework: list[Path]
    app: list[Path]


def load_scenarios(path: Path) -> ScenarioSet:
    """Read a scenarios file and the IR files it names, relative to the file."""

    if not path.is_file():
        raise PcsError(f"Input file not found: {path}")
    try:
        model = _ScenarioFileModel.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValidationError) as exc:
        raise PcsError(f"{path}: invalid scenarios file ({exc})") from exc
    framework = [path.parent / name for name in model.framework]
    app = [path.parent / name for name in model.app]
    return ScenarioSet(
        program=load_program(framework + app),
        scenarios=[Scenario(item.name, tuple(item.calls)) for item in model.scenarios],
        framework=framework,
        app=app,
    )


def run_scenario(program: Program, scenario: Scenario, *, step_budget: int = 100_000) -> list[Trace]:
    """Execute the calls of one scenario in order on a fresh heap."""

    interpreter = Interpreter(program, step_budget=step_budget)
    traces = [interpreter.run_top(call) for call in scenario.calls]
    logger.info("Ran scenario", extra={"scenario": scenario.name, "calls": len(traces)})
    return traces


def is_subsequence(observed: tuple[str, ...], path: tuple[str, ...]) -> bool:
    remaining = iter(path)
    return all(item in remaining for item in observed)
