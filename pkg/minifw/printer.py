"""Pretty printer producing canonical MiniFW IR text."""

from __future__ import annotations

from .model import (
    Assign,
    BinaryOp,
    ClassDef,
    FieldDef,
    FieldLoad,
    FieldStore,
    Goto,
    IfGoto,
    Invoke,
    MethodDef,
    New,
    Program,
    Return,
    StaticLoad,
    StaticStore,
    Stmt,
)

INDENT = "    "


def format_stmt(stmt: Stmt) -> str:
    """Render one statement without labels or indentation."""

    match stmt:
        case Assign(target=target, value=value):
            return f"{target} = {value};"
        case FieldLoad(target=target, base=base, field_name=name):
            return f"{target} = {base}.{name};"
        case StaticLoad(target=target, owner=owner, field_name=name):
            return f"{target} = {owner}.{name};"
        case FieldStore(base=base, field_name=name, value=value):
            return f"{base}.{name} = {value};"
        case StaticStore(owner=owner, field_name=name, value=value):
            return f"{owner}.{name} = {value};"
        case New(target=target, class_name=class_name):
            return f"{target} = new {class_name};"
        case BinaryOp(target=target, op=op, left=left, right=right):
            return f"{target} = {left} {op} {right};"
        case Invoke():
            args = ", ".join(str(arg) for arg in stmt.args)
            call = f"{stmt.call_kind.value} {stmt.base}.{stmt.method}({args})"
            return f"{stmt.target} = {call};" if stmt.target else f"{call};"
        case IfGoto(left=left, op=op, right=right, label=label):
            return f"if {left} {op} {right} goto {label};"
        case Goto(label=label):
            return f"goto {label};"
        case Return(value=value):
            return f"return {value};" if value is not None else "return;"
    raise TypeError(f"Unsupported statement {stmt!r}")  # pragma: no cover - defensive guard


def _method_modifiers(method: MethodDef) -> str:
    parts = [method.visibility.value]
    if method.is_static:
        parts.append("static")
    if method.is_final:
        parts.append("final")
    if method.is_api:
        parts.append("api")
    return " ".join(parts)


def _field_line(item: FieldDef) -> str:
    parts = [item.visibility.value]
    if item.is_static:
        parts.append("static")
    if item.is_final:
        parts.append("final")
    return f"{' '.join(parts)} {item.type} {item.name};"


def format_method(method: MethodDef, *, indent: str = INDENT) -> list[str]:
    params = ", ".join(f"{param.type} {param.name}" for param in method.params)
    header = f"{indent}{_method_modifiers(method)} {method.return_type} {method.name}({params})"
    if method.is_abstract:
        return [header + ";"]
    lines = [header + " {"]
    inner = indent + INDENT
    lines.extend(f"{inner}{local.type} {local.name};" for local in method.locals)
    for stmt in method.body:
        lines.extend(f"{indent}  {label}:" for label in stmt.labels)
        lines.append(inner + format_stmt(stmt))
    lines.append(indent + "}")
    return lines


def format_class(decl: ClassDef) -> list[str]:
    head = [decl.origin.value]
    if decl.is_public:
        head.append("public")
    if decl.is_final:
        head.append("final")
    head.append("interface" if decl.is_interface else "class")
    head.append(decl.name)
    if decl.is_interface:
        if decl.interfaces:
            head.append("extends " + ", ".join(decl.interfaces))
    else:
        if decl.superclass and decl.superclass != "Object":
            head.append(f"extends {decl.superclass}")
        if decl.interfaces:
            head.append("implements " + ", ".join(decl.interfaces))
    lines = [" ".join(head) + " {"]
    lines.extend(INDENT + _field_line(item) for item in decl.fields)
    for method in decl.methods:
        lines.extend(format_method(method))
    lines.append("}")
    return lines


def format_program(program: Program) -> str:
    """Render every user declaration; builtin classes are implicit."""

    blocks = ["\n".join(format_class(decl)) for decl in program.declarations()]
    return "\n\n".join(blocks) + "\n" if blocks else ""
