"""Predicate nodes: branches guarding callbacks, abstracted over app-visible variables."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

from minifw.model import Const, IfGoto, MethodDef
from pcs_core.errors import PreconditionError

from .backward import AccessPath, Arith, BackwardSubstitution, Scope, Value, operand_value
from .callbacks import CallChain, CallSite
from .graphs import CFG, CfgCache, influence
from .receivers import chain_contexts

logger = logging.getLogger(__name__)

MAX_TERMS = 64


@dataclass(frozen=True, slots=True, order=True)
class AbstractVariable:
    """App-visible value: (scope, class type, access path), e.g. ``(static, Global, thread)``."""

    scope: Scope
    class_type: str
    index: int = -1
    path: tuple[str, ...] = ()

    @property
    def scope_text(self) -> str:
        if self.scope is Scope.PARAM:
            return f"param({self.index})"
        return self.scope.value

    def with_path(self, path: tuple[str, ...]) -> "AbstractVariable":
        return AbstractVariable(self.scope, self.class_type, self.index, path)

    def __str__(self) -> str:
        if not self.path:
            return f"({self.scope_text}, {self.class_type})"
        return f"({self.scope_text}, {self.class_type}, {'.'.join(self.path)})"

    def to_json(self) -> dict[str, object]:
        return {"scope": self.scope.value, "class": self.class_type, "index": self.index, "path": list(self.path)}

    @classmethod
    def from_json(cls, data: dict) -> "AbstractVariable":
        return cls(Scope(data["scope"]), str(data["class"]), int(data.get("index", -1)), tuple(data.get("path", ())))


@dataclass(frozen=True, slots=True)
class Arithmetic:
    op: str
    left: "ExprOperand"
    right: "ExprOperand"

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


ExprOperand = Union[AbstractVariable, Const, Arithmetic]


@dataclass(frozen=True, slots=True)
class Term:
    left: ExprOperand
    op: str
    right: ExprOperand

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"

    def variables(self) -> list[AbstractVariable]:
        return _variables(self.left) + _variables(self.right)

    def to_json(self) -> dict[str, object]:
        return {"left": operand_to_json(self.left), "op": self.op, "right": operand_to_json(self.right)}

    @classmethod
    def from_json(cls, data: dict) -> "Term":
        return cls(operand_from_json(data["left"]), str(data["op"]), operand_from_json(data["right"]))


@dataclass(frozen=True, slots=True)
class AbstractExpr:
    """Disjunction of terms; ``unresolved`` marks terms that were dropped."""

    terms: tuple[Term, ...] = ()
    unresolved: bool = False

    @classmethod
    def of(cls, terms: Iterable[Term], unresolved: bool = False, *, max_terms: int = MAX_TERMS) -> "AbstractExpr":
        unique = sorted(set(terms), key=str)
        if len(unique) > max_terms:
            return cls((), True)
        if not unique:
            unresolved = True
        return cls(tuple(unique), unresolved)

    def merge(self, other: "AbstractExpr", *, max_terms: int = MAX_TERMS) -> "AbstractExpr":
        return AbstractExpr.of(self.terms + other.terms, self.unresolved or other.unresolved, max_terms=max_terms)

    def variables(self) -> list[AbstractVariable]:
        return [variable for term in self.terms for variable in term.variables()]

    def __str__(self) -> str:
        text = " ∨ ".join(str(term) for term in self.terms)
        if self.unresolved:
            return f"{text} ∨ ?" if text else "?"
        return text

    def to_json(self) -> dict[str, object]:
        return {"terms": [term.to_json() for term in self.terms], "unresolved": self.unresolved}

    @classmethod
    def from_json(cls, data: dict) -> "AbstractExpr":
        return cls(tuple(Term.from_json(item) for item in data["terms"]), bool(data.get("unresolved", False)))


def _variables(operand: ExprOperand) -> list[AbstractVariable]:
    match operand:
        case AbstractVariable():
            return [operand]
        case Arithmetic(left=left, right=right):
            return _variables(left) + _variables(right)
    return []


def operand_to_json(operand: ExprOperand) -> dict[str, object]:
    match operand:
        case AbstractVariable():
            return {"var": operand.to_json()}
        case Arithmetic(op=op, left=left, right=right):
            return {"arith": {"op": op, "left": operand_to_json(left), "right": operand_to_json(right)}}
        case Const(kind=kind, value=value):
            return {"const": {"kind": kind, "value": value}}
    raise TypeError(f"Unsupported operand {operand!r}")  # pragma: no cover - defensive guard


def operand_from_json(data: dict) -> ExprOperand:
    if "var" in data:
        return AbstractVariable.from_json(data["var"])
    if "arith" in data:
        arith = data["arith"]
        return Arithmetic(str(arith["op"]), operand_from_json(arith["left"]), operand_from_json(arith["right"]))
    const = data["const"]
    return Const(str(const["kind"]), const["value"])


def abstract_value(value: Value, root: MethodDef) -> Optional[ExprOperand]:
    """Rebase a closed backward value onto the root API method's interface."""

    match value:
        case Const():
            return value
        case Arith(op=op, left=left, right=right):
            lhs, rhs = abstract_value(left, root), abstract_value(right, root)
            if lhs is None or rhs is None:
                return None
            return Arithmetic(op, lhs, rhs)
        case AccessPath(scope=Scope.CALLING_OBJECT, chain=chain):
            return AbstractVariable(Scope.CALLING_OBJECT, root.owner, -1, chain)
        case AccessPath(scope=Scope.PARAM, index=index, chain=chain):
            return AbstractVariable(Scope.PARAM, root.params[index].type, index, chain)
        case AccessPath(scope=Scope.STATIC, root=owner, chain=chain):
            return AbstractVariable(Scope.STATIC, owner, -1, chain)
    return None


def identify_predicate_nodes(cfg: CFG, p: int) -> list[int]:
    """Branches of ``cfg`` whose influence contains statement ``p``."""

    if p not in cfg.graph:
        raise PreconditionError(f"Statement {p} is not part of {cfg.key}")
    return [branch for branch in cfg.branch_nodes() if p in influence(cfg, branch)]


def back_substitute(
    branch: CallSite,
    chain: CallChain,
    cfgs: CfgCache,
    *,
    limit: int = 5,
    budget: int = 10_000,
    max_terms: int = MAX_TERMS,
) -> AbstractExpr:
    """Abstract the condition at ``branch`` over variables of the chain's API method.

    ``chain`` ends at the method holding the branch.
    """

    program = cfgs.program
    root = program.method(chain.api)
    method = program.method(branch.method)
    if root is None or method is None or chain.methods[-1] != branch.method:
        raise PreconditionError(f"Branch {branch} does not end call chain {chain.methods}")
    stmt = method.body[branch.sid]
    if not isinstance(stmt, IfGoto):
        raise PreconditionError(f"{branch} is not a conditional branch")

    engine = BackwardSubstitution(cfgs, root, chain_contexts(chain), limit=limit, budget=budget)
    result = engine.run(method.key, stmt.sid, (operand_value(stmt.left), operand_value(stmt.right)))
    terms = []
    unresolved = result.unresolved
    for left, right in result.states:
        lhs, rhs = abstract_value(left, root), abstract_value(right, root)
        if lhs is None or rhs is None:
            unresolved = True
            continue
        terms.append(Term(lhs, stmt.op, rhs))
    expression = AbstractExpr.of(terms, unresolved, max_terms=max_terms)
    logger.debug("Back-substituted predicate", extra={"branch": str(branch), "expression": str(expression)})
    return expression


@dataclass(slots=True)
class PredicateSet:
    """Predicate nodes of one API method keyed by branch location."""

    expressions: dict[CallSite, AbstractExpr] = field(default_factory=dict)

    def add(self, branch: CallSite, expression: AbstractExpr, *, max_terms: int = MAX_TERMS) -> None:
        current = self.expressions.get(branch)
        self.expressions[branch] = expression if current is None else current.merge(expression, max_terms=max_terms)

    def variables(self) -> Iterator[AbstractVariable]:
        for expression in self.expressions.values():
            yield from expression.variables()

    def __len__(self) -> int:
        return len(self.expressions)


def find_predicates(
    sites: dict[CallSite, list[CallChain]],
    cfgs: CfgCache,
    *,
    limit: int = 5,
    budget: int = 10_000,
    max_terms: int = MAX_TERMS,
) -> PredicateSet:
    """Predicate nodes guarding any hop of any chain, including the callback site itself."""

    found = PredicateSet()
    for _, chains in sorted(sites.items()):
        for chain in chains:
            for level, method_key in enumerate(chain.methods):
                cfg = cfgs[method_key]
                for branch in identify_predicate_nodes(cfg, chain.sites[level]):
                    location = CallSite(method_key, branch)
                    expression = back_substitute(
                        location, chain.prefix(level + 1), cfgs, limit=limit, budget=budget, max_terms=max_terms
                    )
                    found.add(location, expression, max_terms=max_terms)
    return found
