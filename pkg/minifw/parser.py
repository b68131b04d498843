"""Lark based parser and validator for MiniFW IR text.

Syntax errors are collected through the LALR error callback so one run
reports as many problems as possible; semantic validation runs only on
syntactically clean input. Both phases raise :class:`IRParseError`.
"""

from __future__ import annotations

import ast
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from lark import Lark, Transformer, UnexpectedCharacters, UnexpectedInput, UnexpectedToken, v_args

from pcs_core.errors import Diagnostic, IRParseError, PcsError, error

from .model import (
    BUILTIN_CLASSES,
    FALSE,
    NULL,
    PRIMITIVE_TYPES,
    THIS,
    TRUE,
    Assign,
    BinaryOp,
    CallKind,
    ClassDef,
    Const,
    FieldDef,
    FieldLoad,
    FieldStore,
    Goto,
    IfGoto,
    Invoke,
    Local,
    MethodDef,
    New,
    Origin,
    Param,
    Program,
    Return,
    StaticLoad,
    StaticStore,
    Stmt,
    Visibility,
)

logger = logging.getLogger(__name__)

GRAMMAR = r"""
start: decl*

decl: [origin] modifiers "class" NAME [superclass] [interfaces] "{" member* "}"  -> class_decl
    | [origin] modifiers "interface" NAME [extended] "{" member* "}"              -> interface_decl

origin: "framework" -> framework
      | "app"       -> app

modifiers: modifier*
!modifier: "public" | "protected" | "private" | "static" | "final" | "api"

superclass: "extends" NAME
interfaces: "implements" name_list
extended: "extends" name_list
name_list: NAME ("," NAME)*

member: modifiers NAME NAME ";"                          -> field_decl
      | modifiers NAME NAME "(" [params] ")" body         -> method_decl
      | modifiers NAME NAME "(" [params] ")" ";"          -> abstract_decl

params: param ("," param)*
param: NAME NAME

body: "{" body_item* "}"
?body_item: local_decl | label | stmt
local_decl: NAME NAME ";"
label: NAME ":"

stmt: NAME "=" operand ";"                          -> assign
    | NAME "=" NAME "." NAME ";"                    -> load
    | NAME "." NAME "=" operand ";"                 -> store
    | NAME "=" "new" NAME ";"                       -> new
    | NAME "=" operand BINOP operand ";"            -> binop
    | NAME "=" call_expr ";"                        -> invoke_assign
    | call_expr ";"                                 -> invoke
    | "if" operand RELOP operand "goto" NAME ";"    -> if_goto
    | "goto" NAME ";"                               -> goto
    | "return" [operand] ";"                        -> ret

call_expr: call_kind NAME "." NAME "(" [args] ")"
!call_kind: "virtual" | "static" | "special"
args: operand ("," operand)*

?operand: NAME              -> var
        | SIGNED_INT        -> int_const
        | "true"            -> true_const
        | "false"           -> false_const
        | "null"            -> null_const
        | ESCAPED_STRING    -> string_const

RELOP: "<=" | ">=" | "==" | "!=" | "<" | ">"
BINOP: "+" | "-" | "*" | "/" | "%"
NAME: /[A-Za-z_$][A-Za-z0-9_$]*/
COMMENT: /#[^\n]*/

%import common.SIGNED_INT
%import common.ESCAPED_STRING
%import common.WS
%ignore WS
%ignore COMMENT
"""

MAX_SYNTAX_DIAGNOSTICS = 20

_PARSER = Lark(GRAMMAR, parser="lalr", propagate_positions=True, maybe_placeholders=True)


@dataclass(slots=True)
class _Label:
    name: str
    line: int
    column: int


@dataclass(slots=True)
class _LocalDecl:
    name: str
    type: str
    line: int
    column: int


@dataclass(slots=True)
class _MemberDraft:
    kind: str
    modifiers: list[str]
    type: str
    name: str
    line: int
    column: int
    params: list[Param] = field(default_factory=list)
    body: Optional[list[Any]] = None


@dataclass(slots=True)
class _DeclDraft:
    is_interface: bool
    origin: Origin
    modifiers: list[str]
    name: str
    superclass: Optional[str]
    interfaces: list[str]
    members: list[_MemberDraft]
    source: str
    line: int
    column: int


def _pos(meta: Any) -> dict[str, int]:
    return {"line": getattr(meta, "line", 0) or 0, "column": getattr(meta, "column", 0) or 0}


class _IRTransformer(Transformer):
    """Turn the parse tree into declaration drafts and statement records."""

    def __init__(self, source: str) -> None:
        super().__init__()
        self._source = source

    def start(self, children: list[_DeclDraft]) -> list[_DeclDraft]:
        return children

    @v_args(meta=True)
    def class_decl(self, meta: Any, children: list[Any]) -> _DeclDraft:
        origin, modifiers, name, superclass, interfaces, *members = children
        return _DeclDraft(
            is_interface=False,
            origin=origin or Origin.APP,
            modifiers=modifiers,
            name=str(name),
            superclass=superclass,
            interfaces=interfaces or [],
            members=members,
            source=self._source,
            **_pos(meta),
        )

    @v_args(meta=True)
    def interface_decl(self, meta: Any, children: list[Any]) -> _DeclDraft:
        origin, modifiers, name, extended, *members = children
        return _DeclDraft(
            is_interface=True,
            origin=origin or Origin.APP,
            modifiers=modifiers,
            name=str(name),
            superclass=None,
            interfaces=extended or [],
            members=members,
            source=self._source,
            **_pos(meta),
        )

    def framework(self, _: list[Any]) -> Origin:
        return Origin.FRAMEWORK

    def app(self, _: list[Any]) -> Origin:
        return Origin.APP

    def modifiers(self, children: list[str]) -> list[str]:
        return list(children)

    def modifier(self, children: list[Any]) -> str:
        return str(children[0])

    def superclass(self, children: list[Any]) -> str:
        return str(children[0])

    def interfaces(self, children: list[list[str]]) -> list[str]:
        return children[0]

    def extended(self, children: list[list[str]]) -> list[str]:
        return children[0]

    def name_list(self, children: list[Any]) -> list[str]:
        return [str(item) for item in children]

    @v_args(meta=True)
    def field_decl(self, meta: Any, children: list[Any]) -> _MemberDraft:
        modifiers, type_name, name = children
        return _MemberDraft("field", modifiers, str(type_name), str(name), **_pos(meta))

    @v_args(meta=True)
    def method_decl(self, meta: Any, children: list[Any]) -> _MemberDraft:
        modifiers, return_type, name, params, body = children
        return _MemberDraft(
            "method", modifiers, str(return_type), str(name), params=params or [], body=body, **_pos(meta)
        )

    @v_args(meta=True)
    def abstract_decl(self, meta: Any, children: list[Any]) -> _MemberDraft:
        modifiers, return_type, name, params = children
        return _MemberDraft("method", modifiers, str(return_type), str(name), params=params or [], **_pos(meta))

    def params(self, children: list[Param]) -> list[Param]:
        return list(children)

    def param(self, children: list[Any]) -> Param:
        type_name, name = children
        return Param(str(name), str(type_name))

    def body(self, children: list[Any]) -> list[Any]:
        return list(children)

    @v_args(meta=True)
    def local_decl(self, meta: Any, children: list[Any]) -> _LocalDecl:
        type_name, name = children
        return _LocalDecl(str(name), str(type_name), **_pos(meta))

    @v_args(meta=True)
    def label(self, meta: Any, children: list[Any]) -> _Label:
        return _Label(str(children[0]), **_pos(meta))

    @v_args(meta=True)
    def assign(self, meta: Any, children: list[Any]) -> Stmt:
        target, value = children
        return Assign(target=str(target), value=value, **_pos(meta))

    @v_args(meta=True)
    def load(self, meta: Any, children: list[Any]) -> Stmt:
        target, base, name = children
        return FieldLoad(target=str(target), base=str(base), field_name=str(name), **_pos(meta))

    @v_args(meta=True)
    def store(self, meta: Any, children: list[Any]) -> Stmt:
        base, name, value = children
        return FieldStore(base=str(base), field_name=str(name), value=value, **_pos(meta))

    @v_args(meta=True)
    def new(self, meta: Any, children: list[Any]) -> Stmt:
        target, class_name = children
        return New(target=str(target), class_name=str(class_name), **_pos(meta))

    @v_args(meta=True)
    def binop(self, meta: Any, children: list[Any]) -> Stmt:
        target, left, op, right = children
        return BinaryOp(target=str(target), op=str(op), left=left, right=right, **_pos(meta))

    @v_args(meta=True)
    def invoke_assign(self, meta: Any, children: list[Any]) -> Stmt:
        target, call = children
        kind, base, method, args = call
        return Invoke(target=str(target), call_kind=kind, base=base, method=method, args=args, **_pos(meta))

    @v_args(meta=True)
    def invoke(self, meta: Any, children: list[Any]) -> Stmt:
        kind, base, method, args = children[0]
        return Invoke(call_kind=kind, base=base, method=method, args=args, **_pos(meta))

    def call_expr(self, children: list[Any]) -> tuple[CallKind, str, str, tuple[Any, ...]]:
        kind, base, method, args = children
        return kind, str(base), str(method), tuple(args or ())

    def call_kind(self, children: list[Any]) -> CallKind:
        return CallKind(str(children[0]))

    def args(self, children: list[Any]) -> list[Any]:
        return list(children)

    @v_args(meta=True)
    def if_goto(self, meta: Any, children: list[Any]) -> Stmt:
        left, op, right, label = children
        return IfGoto(left=left, op=str(op), right=right, label=str(label), **_pos(meta))

    @v_args(meta=True)
    def goto(self, meta: Any, children: list[Any]) -> Stmt:
        return Goto(label=str(children[0]), **_pos(meta))

    @v_args(meta=True)
    def ret(self, meta: Any, children: list[Any]) -> Stmt:
        return Return(value=children[0], **_pos(meta))

    def var(self, children: list[Any]) -> Local:
        return Local(str(children[0]))

    def int_const(self, children: list[Any]) -> Const:
        return Const.of(int(str(children[0])))

    def true_const(self, _: list[Any]) -> Const:
        return TRUE

    def false_const(self, _: list[Any]) -> Const:
        return FALSE

    def null_const(self, _: list[Any]) -> Const:
        return NULL

    def string_const(self, children: list[Any]) -> Const:
        return Const.of(ast.literal_eval(str(children[0])))


def _syntax_diagnostic(exc: UnexpectedInput, source: str) -> Diagnostic:
    line = max(getattr(exc, "line", 0) or 0, 0)
    column = max(getattr(exc, "column", 0) or 0, 0)
    if isinstance(exc, UnexpectedToken):
        if exc.token.type == "$END":
            message = "syntax error: unexpected end of input"
        else:
            message = f"syntax error: unexpected {str(exc.token)!r}"
    elif isinstance(exc, UnexpectedCharacters):
        message = f"syntax error: unexpected character {exc.char!r}"
    else:  # pragma: no cover - defensive guard
        message = "syntax error"
    return error(message, source=source, line=line, column=column)


def _parse_drafts(text: str, source: str, diagnostics: list[Diagnostic]) -> list[_DeclDraft]:
    found: list[Diagnostic] = []

    def on_error(exc: UnexpectedInput) -> bool:
        found.append(_syntax_diagnostic(exc, source))
        return len(found) < MAX_SYNTAX_DIAGNOSTICS

    try:
        tree = _PARSER.parse(text, on_error=on_error)
    except UnexpectedInput as exc:
        diagnostic = _syntax_diagnostic(exc, source)
        if diagnostic not in found:
            found.append(diagnostic)
        tree = None

    if found:
        diagnostics.extend(found)
        return []
    return _IRTransformer(source).transform(tree)


_CLASS_MODIFIERS = {"public", "final"}
_VISIBILITIES = {item.value for item in Visibility}


class _ProgramBuilder:
    """Validate drafts and assemble an immutable :class:`Program`."""

    def __init__(self, drafts: Sequence[_DeclDraft]) -> None:
        self._drafts = drafts
        self.diagnostics: list[Diagnostic] = []

    def _error(self, message: str, at: Any, source: str) -> None:
        line = getattr(at, "line", 0)
        column = getattr(at, "column", 0)
        self.diagnostics.append(error(message, source=source, line=line, column=column))

    def build(self) -> Program:
        accepted: list[_DeclDraft] = []
        names: set[str] = set(BUILTIN_CLASSES)
        for draft in self._drafts:
            if draft.name in names:
                self._error(f"duplicate class {draft.name}", draft, draft.source)
                continue
            names.add(draft.name)
            accepted.append(draft)

        by_name = {draft.name: draft for draft in accepted}
        skeletons = [self._skeleton(draft, by_name) for draft in accepted]
        self._check_cycles(skeletons, by_name)
        skeleton_program = _assemble(skeletons)

        completed: list[ClassDef] = []
        for draft, decl in zip(accepted, skeletons):
            methods = tuple(
                self._method(member, decl, draft.source, skeleton_program)
                for member in draft.members
                if member.kind == "method"
            )
            completed.append(replace(decl, methods=methods))

        if self.diagnostics:
            raise IRParseError(sorted(self.diagnostics, key=_diagnostic_order))
        return _assemble(completed)

    def _skeleton(self, draft: _DeclDraft, by_name: dict[str, _DeclDraft]) -> ClassDef:
        kind = "interface" if draft.is_interface else "class"
        allowed = {"public"} if draft.is_interface else _CLASS_MODIFIERS
        for modifier in draft.modifiers:
            if modifier == "api":
                self._error("api flag only applies to methods", draft, draft.source)
            elif modifier not in allowed:
                self._error(f"modifier {modifier} not allowed on {kind} {draft.name}", draft, draft.source)

        superclass: Optional[str] = None
        if not draft.is_interface:
            superclass = draft.superclass or "Object"
            target = by_name.get(superclass)
            if superclass not in BUILTIN_CLASSES and target is None:
                self._error(f"unresolved superclass {superclass}", draft, draft.source)
                superclass = "Object"
            elif target is not None and target.is_interface:
                self._error(f"class {draft.name} cannot extend interface {superclass}", draft, draft.source)
                superclass = "Object"
            elif target is not None and "final" in target.modifiers:
                self._error(f"class {draft.name} cannot extend final class {superclass}", draft, draft.source)

        interfaces: list[str] = []
        for name in draft.interfaces:
            target = by_name.get(name)
            if target is None:
                self._error(f"unresolved interface {name}", draft, draft.source)
            elif not target.is_interface:
                self._error(f"{kind} {draft.name} cannot implement class {name}", draft, draft.source)
            else:
                interfaces.append(name)

        known = set(by_name) | set(BUILTIN_CLASSES)
        fields: list[FieldDef] = []
        signatures: set[tuple[str, int]] = set()
        for member in draft.members:
            self._check_type(member.type, known, member, draft.source, allow_void=member.kind == "method")
            if member.kind == "field":
                if draft.is_interface:
                    self._error(f"interface {draft.name} cannot declare field {member.name}", member, draft.source)
                if any(item.name == member.name for item in fields):
                    self._error(f"duplicate field {member.name} in {draft.name}", member, draft.source)
                fields.append(self._field(member, draft.source))
            else:
                signature = (member.name, len(member.params))
                if signature in signatures:
                    self._error(
                        f"duplicate method {member.name}/{len(member.params)} in {draft.name}", member, draft.source
                    )
                signatures.add(signature)
                for item in member.params:
                    self._check_type(item.type, known, member, draft.source)

        return ClassDef(
            name=draft.name,
            origin=draft.origin,
            is_interface=draft.is_interface,
            superclass=superclass,
            interfaces=tuple(interfaces),
            is_public="public" in draft.modifiers,
            is_final="final" in draft.modifiers,
            fields=tuple(fields),
            line=draft.line,
        )

    def _check_type(self, name: str, known: set[str], at: Any, source: str, *, allow_void: bool = False) -> None:
        if name == "void" and not allow_void:
            self._error("void is not a value type", at, source)
        elif name not in PRIMITIVE_TYPES and name not in known:
            self._error(f"unresolved type {name}", at, source)

    def _visibility(self, member: _MemberDraft, source: str) -> Visibility:
        chosen = [item for item in member.modifiers if item in _VISIBILITIES]
        if len(chosen) > 1:
            self._error(f"conflicting visibility on {member.name}", member, source)
        return Visibility(chosen[0]) if chosen else Visibility.PUBLIC

    def _field(self, member: _MemberDraft, source: str) -> FieldDef:
        if "api" in member.modifiers:
            self._error("api flag only applies to methods", member, source)
        return FieldDef(
            name=member.name,
            type=member.type,
            visibility=self._visibility(member, source),
            is_static="static" in member.modifiers,
            is_final="final" in member.modifiers,
            line=member.line,
        )

    def _check_cycles(self, skeletons: list[ClassDef], by_name: dict[str, _DeclDraft]) -> None:
        parents = {
            decl.name: [name for name in ([decl.superclass] if decl.superclass else []) + list(decl.interfaces)]
            for decl in skeletons
        }
        for decl in skeletons:
            stack = list(parents[decl.name])
            seen: set[str] = set()
            while stack:
                current = stack.pop()
                if current == decl.name:
                    draft = by_name[decl.name]
                    self._error(f"inheritance cycle involving {decl.name}", draft, draft.source)
                    break
                if current in seen:
                    continue
                seen.add(current)
                stack.extend(parents.get(current, []))

    def _method(self, member: _MemberDraft, owner: ClassDef, source: str, program: Program) -> MethodDef:
        qualified = f"{owner.name}.{member.name}"
        is_api = "api" in member.modifiers
        if is_api and owner.origin is not Origin.FRAMEWORK:
            self._error(f"api flag on app method {qualified}", member, source)
        if is_api and member.body is None:
            self._error(f"api method {qualified} must have a body", member, source)
        if owner.is_interface and member.body is not None:
            self._error(f"interface method {qualified} must not have a body", member, source)

        method = MethodDef(
            owner=owner.name,
            name=member.name,
            params=tuple(member.params),
            return_type=member.type,
            visibility=self._visibility(member, source),
            is_static="static" in member.modifiers,
            is_final="final" in member.modifiers,
            is_api=is_api,
            is_abstract=member.body is None,
            line=member.line,
        )
        if member.body is None:
            return method
        return _BodyBuilder(self, method, source, program).build(member.body)


class _BodyBuilder:
    """Number statements, attach labels, and resolve names inside one method body."""

    def __init__(self, owner: _ProgramBuilder, method: MethodDef, source: str, program: Program) -> None:
        self._owner = owner
        self._method = method
        self._source = source
        self._program = program
        self._scope: dict[str, str] = {}

    def _error(self, message: str, at: Any) -> None:
        self._owner._error(f"{message} in {self._method.qualified_name}", at, self._source)

    def build(self, items: list[Any]) -> MethodDef:
        known = {decl.name for decl in self._program.declarations()} | set(BUILTIN_CLASSES)
        if not self._method.is_static:
            self._scope[THIS] = self._method.owner
        for item in self._method.params:
            if item.name in self._scope:
                self._error(f"duplicate local {item.name}", self._method)
            self._scope[item.name] = item.type

        local_decls: list[Param] = []
        statements: list[Stmt] = []
        pending: list[_Label] = []
        for item in items:
            if isinstance(item, _LocalDecl):
                if item.name in self._scope:
                    self._error(f"duplicate local {item.name}", item)
                self._owner._check_type(item.type, known, item, self._source)
                self._scope[item.name] = item.type
                local_decls.append(Param(item.name, item.type))
            elif isinstance(item, _Label):
                pending.append(item)
            else:
                labels = tuple(label.name for label in pending)
                statements.append(replace(item, sid=len(statements), labels=labels))
                pending = []
        for label in pending:
            self._error(f"label {label.name} must precede a statement", label)

        seen_labels: set[str] = set()
        for stmt in statements:
            for label in stmt.labels:
                if label in seen_labels:
                    self._error(f"duplicate label {label}", stmt)
                seen_labels.add(label)

        resolved = tuple(self._resolve(stmt, seen_labels) for stmt in statements)
        return replace(self._method, locals=tuple(local_decls), body=resolved)

    def _use(self, name: str, at: Stmt) -> Optional[str]:
        declared = self._scope.get(name)
        if declared is None:
            self._error(f"unresolved local {name}", at)
        return declared

    def _operand(self, operand: Any, at: Stmt) -> None:
        if isinstance(operand, Local):
            self._use(operand.name, at)

    def _field_of(self, type_name: Optional[str], field_name: str, at: Stmt, *, static: bool) -> None:
        if type_name is None:
            return
        if type_name in PRIMITIVE_TYPES:
            self._error(f"cannot access field {field_name} on {type_name}", at)
            return
        for decl in self._program.superclass_chain(type_name):
            found = decl.find_field(field_name)
            if found is not None:
                if static and not found.is_static:
                    self._error(f"field {decl.name}.{field_name} is not static", at)
                return
        self._error(f"unresolved field {type_name}.{field_name}", at)

    def _resolve(self, stmt: Stmt, labels: set[str]) -> Stmt:
        for name in stmt.used_locals():
            if not isinstance(stmt, (FieldLoad, FieldStore)):
                self._use(name, stmt)
        target = stmt.defined_local()
        if target is not None:
            self._use(target, stmt)

        if isinstance(stmt, FieldLoad):
            if stmt.base not in self._scope and self._program.lookup(stmt.base) is not None:
                self._field_of(stmt.base, stmt.field_name, stmt, static=True)
                return StaticLoad(
                    target=stmt.target,
                    owner=stmt.base,
                    field_name=stmt.field_name,
                    sid=stmt.sid,
                    labels=stmt.labels,
                    line=stmt.line,
                    column=stmt.column,
                )
            self._field_of(self._use(stmt.base, stmt), stmt.field_name, stmt, static=False)
        elif isinstance(stmt, FieldStore):
            self._operand(stmt.value, stmt)
            if stmt.base not in self._scope and self._program.lookup(stmt.base) is not None:
                self._field_of(stmt.base, stmt.field_name, stmt, static=True)
                return StaticStore(
                    owner=stmt.base,
                    field_name=stmt.field_name,
                    value=stmt.value,
                    sid=stmt.sid,
                    labels=stmt.labels,
                    line=stmt.line,
                    column=stmt.column,
                )
            self._field_of(self._use(stmt.base, stmt), stmt.field_name, stmt, static=False)
        elif isinstance(stmt, New):
            decl = self._program.lookup(stmt.class_name)
            if decl is None:
                self._error(f"unresolved type {stmt.class_name}", stmt)
            elif decl.is_interface:
                self._error(f"cannot instantiate interface {stmt.class_name}", stmt)
        elif isinstance(stmt, Invoke) and stmt.call_kind is CallKind.STATIC:
            if self._program.lookup(stmt.base) is None:
                self._error(f"unresolved class {stmt.base}", stmt)
        elif isinstance(stmt, (IfGoto, Goto)) and stmt.label not in labels:
            self._error(f"unresolved label {stmt.label}", stmt)
        return stmt


def _assemble(decls: Iterable[ClassDef]) -> Program:
    items = list(decls)
    return Program(
        classes=tuple(decl for decl in items if not decl.is_interface),
        interfaces=tuple(decl for decl in items if decl.is_interface),
        origin={decl.name: decl.origin for decl in [*BUILTIN_CLASSES.values(), *items]},
    )


def _diagnostic_order(item: Diagnostic) -> tuple[str, int, int, str]:
    return (item.source or "", item.line, item.column, item.message)


def parse_sources(sources: Sequence[tuple[str, str]]) -> Program:
    """Parse several ``(text, source name)`` pairs into one validated program."""

    diagnostics: list[Diagnostic] = []
    drafts: list[_DeclDraft] = []
    for text, source in sources:
        drafts.extend(_parse_drafts(text, source, diagnostics))
    if diagnostics:
        raise IRParseError(diagnostics)

    program = _ProgramBuilder(drafts).build()
    logger.debug(
        "Parsed program",
        extra={"sources": [source for _, source in sources], "classes": len(program.declarations())},
    )
    return program


def parse_program(text: str, source: str = "<input>") -> Program:
    """Parse and validate one IR text."""

    return parse_sources([(text, source)])


def load_program(paths: Sequence[Path]) -> Program:
    """Read and parse IR files; a missing file is reported by path."""

    sources: list[tuple[str, str]] = []
    for path in paths:
        if not path.is_file():
            raise PcsError(f"Input file not found: {path}")
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise PcsError(f"Cannot read {path}: {exc}") from exc
        sources.append((text, str(path)))
    return parse_sources(sources)
