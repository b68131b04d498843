"""Class hierarchy queries: virtual dispatch, declarations and CHA target sets."""

from __future__ import annotations

from typing import Optional

from .model import MethodDef, Program, Signature


def resolve_dispatch(program: Program, receiver_class: str, signature: Signature) -> Optional[MethodDef]:
    """Return the concrete method a call on ``receiver_class`` runs, walking up superclasses."""

    for decl in program.superclass_chain(receiver_class):
        method = decl.find_method(signature)
        if method is not None and method.has_body:
            return method
    return None


def find_declaration(program: Program, declared_type: str, signature: Signature) -> Optional[MethodDef]:
    """Return the nearest declaration of ``signature`` visible from ``declared_type``.

    Interfaces are searched as well, and abstract declarations count.
    """

    for name in program.supertypes(declared_type):
        decl = program.lookup(name)
        if decl is None:
            continue
        method = decl.find_method(signature)
        if method is not None:
            return method
    return None


def cha_targets(program: Program, declared_type: str, signature: Signature) -> list[MethodDef]:
    """All methods a virtual call on ``declared_type`` may reach under class hierarchy analysis."""

    targets: list[MethodDef] = []
    seen: set[str] = set()
    for name in program.subtypes(declared_type):
        decl = program.lookup(name)
        if decl is None or decl.is_interface:
            continue
        method = resolve_dispatch(program, name, signature)
        if method is not None and method.key not in seen:
            seen.add(method.key)
            targets.append(method)
    return targets
