"""Immutable data model of MiniFW IR programs.

A :class:`Program` is a set of framework and app classes written in a small
three-address language. Statements are typed records; every analysis pattern
matches on the concrete statement class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, Iterator, Mapping, Optional, Union


class Origin(str, Enum):
    FRAMEWORK = "framework"
    APP = "app"


class Visibility(str, Enum):
    PUBLIC = "public"
    PROTECTED = "protected"
    PRIVATE = "private"


class CallKind(str, Enum):
    VIRTUAL = "virtual"
    STATIC = "static"
    SPECIAL = "special"


class StmtKind(str, Enum):
    ASSIGN_LOCAL = "assign-local"
    FIELD_STORE = "assign-field-store"
    STATIC_STORE = "assign-static-store"
    FIELD_LOAD = "field-load"
    STATIC_LOAD = "static-load"
    NEW = "new"
    BINARY_OP = "binary-op"
    VIRTUAL_CALL = "virtual-call"
    STATIC_CALL = "static-call"
    SPECIAL_CALL = "special-call"
    IF_GOTO = "if-goto"
    GOTO = "goto"
    RETURN = "return"


RELATIONAL_OPERATORS = ("<", ">", "<=", ">=", "==", "!=")
ARITHMETIC_OPERATORS = ("+", "-", "*", "/", "%")
PRIMITIVE_TYPES = frozenset({"void", "int", "boolean", "String"})
BUILTIN_CLASS_NAMES = ("Object", "List", "Set", "Map", "ArrayMap", "SparseArray", "Handler")
THIS = "this"


@dataclass(frozen=True, slots=True)
class Local:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Const:
    """Literal operand; ``kind`` keeps ``true`` and ``1`` apart."""

    kind: str
    value: Union[int, bool, str, None]

    @classmethod
    def of(cls, value: Union[int, bool, str, None]) -> "Const":
        if value is None:
            return NULL
        if isinstance(value, bool):
            return TRUE if value else FALSE
        if isinstance(value, int):
            return cls("int", value)
        return cls("string", value)

    def __str__(self) -> str:
        if self.kind == "null":
            return "null"
        if self.kind == "bool":
            return "true" if self.value else "false"
        if self.kind == "string":
            return json.dumps(self.value)
        return str(self.value)


NULL = Const("null", None)
TRUE = Const("bool", True)
FALSE = Const("bool", False)

Operand = Union[Local, Const]


@dataclass(frozen=True, slots=True, kw_only=True)
class Stmt:
    """Base statement; ``sid`` is the dense index within the owning method."""

    kind: ClassVar[StmtKind]

    sid: int = -1
    labels: tuple[str, ...] = ()
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    def defined_local(self) -> Optional[str]:
        return None

    def used_locals(self) -> tuple[str, ...]:
        return ()


def _names(*operands: Optional[Operand]) -> tuple[str, ...]:
    return tuple(item.name for item in operands if isinstance(item, Local))


@dataclass(frozen=True, slots=True, kw_only=True)
class Assign(Stmt):
    kind: ClassVar[StmtKind] = StmtKind.ASSIGN_LOCAL

    target: str
    value: Operand

    def defined_local(self) -> Optional[str]:
        return self.target

    def used_locals(self) -> tuple[str, ...]:
        return _names(self.value)


@dataclass(frozen=True, slots=True, kw_only=True)
class FieldLoad(Stmt):
    kind: ClassVar[StmtKind] = StmtKind.FIELD_LOAD

    target: str
    base: str
    field_name: str

    def defined_local(self) -> Optional[str]:
        return self.target

    def used_locals(self) -> tuple[str, ...]:
        return (self.base,)


@dataclass(frozen=True, slots=True, kw_only=True)
class StaticLoad(Stmt):
    kind: ClassVar[StmtKind] = StmtKind.STATIC_LOAD

    target: str
    owner: str
    field_name: str

    def defined_local(self) -> Optional[str]:
        return self.target


@dataclass(frozen=True, slots=True, kw_only=True)
class FieldStore(Stmt):
    kind: ClassVar[StmtKind] = StmtKind.FIELD_STORE

    base: str
    field_name: str
    value: Operand

    def used_locals(self) -> tuple[str, ...]:
        return (self.base,) + _names(self.value)


@dataclass(frozen=True, slots=True, kw_only=True)
class StaticStore(Stmt):
    kind: ClassVar[StmtKind] = StmtKind.STATIC_STORE

    owner: str
    field_name: str
    value: Operand

    def used_locals(self) -> tuple[str, ...]:
        return _names(self.value)


@dataclass(frozen=True, slots=True, kw_only=True)
class New(Stmt):
    kind: ClassVar[StmtKind] = StmtKind.NEW

    target: str
    class_name: str

    def defined_local(self) -> Optional[str]:
        return self.target


@dataclass(frozen=True, slots=True, kw_only=True)
class BinaryOp(Stmt):
    kind: ClassVar[StmtKind] = StmtKind.BINARY_OP

    target: str
    op: str
    left: Operand
    right: Operand

    def defined_local(self) -> Optional[str]:
        return self.target

    def used_locals(self) -> tuple[str, ...]:
        return _names(self.left, self.right)


@dataclass(frozen=True, slots=True, kw_only=True)
class Invoke(Stmt):
    """Method call; ``base`` is a local for virtual/special calls and a class for static ones."""

    kind: ClassVar[StmtKind] = StmtKind.VIRTUAL_CALL

    target: Optional[str] = None
    call_kind: CallKind
    base: str
    method: str
    args: tuple[Operand, ...] = ()

    @property
    def stmt_kind(self) -> StmtKind:
        return {
            CallKind.VIRTUAL: StmtKind.VIRTUAL_CALL,
            CallKind.STATIC: StmtKind.STATIC_CALL,
            CallKind.SPECIAL: StmtKind.SPECIAL_CALL,
        }[self.call_kind]

    @property
    def arity(self) -> int:
        return len(self.args)

    def defined_local(self) -> Optional[str]:
        return self.target

    def used_locals(self) -> tuple[str, ...]:
        receiver = () if self.call_kind is CallKind.STATIC else (self.base,)
        return receiver + _names(*self.args)


@dataclass(frozen=True, slots=True, kw_only=True)
class IfGoto(Stmt):
    kind: ClassVar[StmtKind] = StmtKind.IF_GOTO

    left: Operand
    op: str
    right: Operand
    label: str

    def used_locals(self) -> tuple[str, ...]:
        return _names(self.left, self.right)


@dataclass(frozen=True, slots=True, kw_only=True)
class Goto(Stmt):
    kind: ClassVar[StmtKind] = StmtKind.GOTO

    label: str


@dataclass(frozen=True, slots=True, kw_only=True)
class Return(Stmt):
    kind: ClassVar[StmtKind] = StmtKind.RETURN

    value: Optional[Operand] = None

    def used_locals(self) -> tuple[str, ...]:
        return _names(self.value)


def stmt_kind(stmt: Stmt) -> StmtKind:
    """Return the statement kind, distinguishing the three call flavours."""

    if isinstance(stmt, Invoke):
        return stmt.stmt_kind
    return stmt.kind


@dataclass(frozen=True, slots=True)
class Signature:
    """Method identity used for dispatch: name plus arity."""

    name: str
    arity: int

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True, slots=True)
class Param:
    name: str
    type: str


@dataclass(frozen=True, slots=True, kw_only=True)
class FieldDef:
    name: str
    type: str
    visibility: Visibility = Visibility.PUBLIC
    is_static: bool = False
    is_final: bool = False
    line: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True, kw_only=True)
class MethodDef:
    owner: str
    name: str
    params: tuple[Param, ...] = ()
    return_type: str = "void"
    visibility: Visibility = Visibility.PUBLIC
    is_static: bool = False
    is_final: bool = False
    is_api: bool = False
    is_abstract: bool = False
    locals: tuple[Param, ...] = ()
    body: tuple[Stmt, ...] = ()
    line: int = field(default=0, compare=False)

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def signature(self) -> Signature:
        return Signature(self.name, self.arity)

    @property
    def key(self) -> str:
        """Unique, human readable identifier such as ``ContextImpl.startService(Intent)``."""

        types = ",".join(param.type for param in self.params)
        return f"{self.owner}.{self.name}({types})"

    @property
    def qualified_name(self) -> str:
        return f"{self.owner}.{self.name}"

    @property
    def has_body(self) -> bool:
        return not self.is_abstract

    def local_type(self, name: str) -> Optional[str]:
        if name == THIS and not self.is_static:
            return self.owner
        for item in self.params:
            if item.name == name:
                return item.type
        for item in self.locals:
            if item.name == name:
                return item.type
        return None

    def param_index(self, name: str) -> Optional[int]:
        for index, item in enumerate(self.params):
            if item.name == name:
                return index
        return None

    def label_targets(self) -> dict[str, int]:
        return {label: stmt.sid for stmt in self.body for label in stmt.labels}


@dataclass(frozen=True, slots=True, kw_only=True)
class ClassDef:
    name: str
    origin: Origin = Origin.APP
    is_interface: bool = False
    superclass: Optional[str] = "Object"
    interfaces: tuple[str, ...] = ()
    is_public: bool = False
    is_final: bool = False
    fields: tuple[FieldDef, ...] = ()
    methods: tuple[MethodDef, ...] = ()
    builtin: bool = False
    line: int = field(default=0, compare=False)

    def find_method(self, signature: Signature) -> Optional[MethodDef]:
        for method in self.methods:
            if method.signature == signature:
                return method
        return None

    def find_field(self, name: str) -> Optional[FieldDef]:
        for item in self.fields:
            if item.name == name:
                return item
        return None


BUILTIN_CLASSES: Mapping[str, ClassDef] = {
    name: ClassDef(
        name=name,
        origin=Origin.FRAMEWORK,
        superclass=None if name == "Object" else "Object",
        is_public=True,
        builtin=True,
    )
    for name in BUILTIN_CLASS_NAMES
}


@dataclass(frozen=True, slots=True)
class Program:
    """Validated program; treat as read-only once built."""

    classes: tuple[ClassDef, ...]
    interfaces: tuple[ClassDef, ...]
    origin: Mapping[str, Origin]
    _types: dict[str, ClassDef] = field(init=False, repr=False, compare=False)
    _methods: dict[str, MethodDef] = field(init=False, repr=False, compare=False)
    _subtypes: dict[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        types: dict[str, ClassDef] = dict(BUILTIN_CLASSES)
        for decl in self.classes + self.interfaces:
            types[decl.name] = decl
        methods = {method.key: method for decl in types.values() for method in decl.methods}
        object.__setattr__(self, "_types", types)
        object.__setattr__(self, "_methods", methods)
        object.__setattr__(self, "_subtypes", {})

    def lookup(self, name: str) -> Optional[ClassDef]:
        return self._types.get(name)

    def declarations(self) -> tuple[ClassDef, ...]:
        """User-declared classes and interfaces in source order."""

        return tuple(sorted(self.classes + self.interfaces, key=lambda decl: self._order(decl.name)))

    def _order(self, name: str) -> int:
        for index, decl in enumerate(self.classes + self.interfaces):
            if decl.name == name:
                return index
        return -1

    def methods(self) -> Iterator[MethodDef]:
        for decl in self.classes + self.interfaces:
            yield from decl.methods

    def method(self, key: str) -> Optional[MethodDef]:
        return self._methods.get(key)

    def api_methods(self) -> list[MethodDef]:
        return [method for method in self.methods() if method.is_api]

    def is_framework(self, class_name: str) -> bool:
        return self.origin.get(class_name) is Origin.FRAMEWORK

    def is_app(self, class_name: str) -> bool:
        return self.origin.get(class_name) is Origin.APP

    def superclass_chain(self, name: str) -> list[ClassDef]:
        """Return ``name`` followed by its superclasses, nearest first."""

        chain: list[ClassDef] = []
        current = self.lookup(name)
        while current is not None and current not in chain:
            chain.append(current)
            current = self.lookup(current.superclass) if current.superclass else None
        return chain

    def supertypes(self, name: str) -> list[str]:
        """All transitive supertypes including ``name``; breadth first, deterministic."""

        seen: list[str] = []
        queue = [name]
        while queue:
            current = queue.pop(0)
            if current in seen:
                continue
            seen.append(current)
            decl = self.lookup(current)
            if decl is None:
                continue
            if decl.superclass:
                queue.append(decl.superclass)
            queue.extend(decl.interfaces)
        return seen

    def is_subtype(self, name: str, ancestor: str) -> bool:
        return ancestor in self.supertypes(name)

    def subtypes(self, name: str) -> tuple[str, ...]:
        """Subtype cone of ``name`` (itself included) in declaration order."""

        cached = self._subtypes.get(name)
        if cached is not None:
            return cached
        ordered = list(BUILTIN_CLASS_NAMES) + [decl.name for decl in self.classes + self.interfaces]
        cone = tuple(
            candidate
            for candidate in dict.fromkeys(ordered)
            if candidate in self._types and self.is_subtype(candidate, name)
        )
        self._subtypes[name] = cone
        return cone

    def field_type(self, class_name: str, field_name: str) -> Optional[str]:
        for decl in self.superclass_chain(class_name):
            found = decl.find_field(field_name)
            if found is not None:
                return found.type
        return None
