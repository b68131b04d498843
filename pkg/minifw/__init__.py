"""MiniFW IR: model, parser, printer and class hierarchy queries."""

from .hierarchy import cha_targets, find_declaration, resolve_dispatch
from .model import (
    BUILTIN_CLASS_NAMES,
    CallKind,
    ClassDef,
    Const,
    Local,
    MethodDef,
    Origin,
    Program,
    Signature,
    Stmt,
    StmtKind,
    Visibility,
    stmt_kind,
)
from .parser import load_program, parse_program, parse_sources
from .printer import format_program, format_stmt

__all__ = [
    "BUILTIN_CLASS_NAMES",
    "CallKind",
    "ClassDef",
    "Const",
    "Local",
    "MethodDef",
    "Origin",
    "Program",
    "Signature",
    "Stmt",
    "StmtKind",
    "Visibility",
    "cha_targets",
    "find_declaration",
    "format_program",
    "format_stmt",
    "load_program",
    "parse_program",
    "parse_sources",
    "resolve_dispatch",
    "stmt_kind",
]
