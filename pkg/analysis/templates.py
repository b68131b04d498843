"""Collection templates pairing predicate methods with update methods."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from pcs_core.errors import ConfigError

logger = logging.getLogger(__name__)

# Effects a template update has on the value later returned by a predicate method.
NONNULL = "nonnull"
POSITIVE = "positive"


@dataclass(frozen=True, slots=True)
class TemplateRow:
    class_name: str
    predicate_methods: tuple[str, ...]
    update_methods: tuple[str, ...]

    def matches_predicate(self, name: str) -> bool:
        return _matches(self.predicate_methods, name)

    def matches_update(self, name: str) -> bool:
        return _matches(self.update_methods, name)

    def __str__(self) -> str:
        return f"{self.class_name} | {', '.join(self.predicate_methods)} | {', '.join(self.update_methods)}"


def _matches(patterns: Iterable[str], name: str) -> bool:
    for pattern in patterns:
        if pattern.endswith("*"):
            if name.startswith(pattern[:-1]):
                return True
        elif name == pattern:
            return True
    return False


DEFAULT_ROWS = (
    TemplateRow("List", ("isEmpty", "size", "get*", "contains*"), ("add*", "remove*", "set")),
    TemplateRow("Set", ("isEmpty", "size", "contains*"), ("add*", "remove*")),
    TemplateRow("Map", ("isEmpty", "size", "contains*", "get"), ("put*", "remove")),
    TemplateRow("ArrayMap", ("isEmpty", "size", "value*", "contains*"), ("setValueAt", "put*", "remove*")),
    TemplateRow("SparseArray", ("size", "value*"), ("setValueAt", "put*", "remove*", "delete")),
)


@dataclass(frozen=True, slots=True)
class TemplateTable:
    rows: tuple[TemplateRow, ...] = DEFAULT_ROWS

    def row_for(self, class_name: str) -> Optional[TemplateRow]:
        for row in self.rows:
            if row.class_name == class_name:
                return row
        return None

    @classmethod
    def load(cls, path: Path) -> "TemplateTable":
        """Read rows of ``class | pred-methods | update-methods``; ``#`` starts a comment."""

        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"Cannot read template table {path}: {exc}") from exc
        return cls.parse(text, source=str(path))

    @classmethod
    def parse(cls, text: str, *, source: str = "<templates>") -> "TemplateTable":
        rows = []
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [part.strip() for part in line.split("|")]
            if len(parts) != 3 or not parts[0]:
                raise ConfigError(f"{source}:{number}: expected 'class | pred-methods | update-methods'")
            rows.append(TemplateRow(parts[0], _names(parts[1]), _names(parts[2])))
        logger.debug("Loaded template table", extra={"source": source, "rows": len(rows)})
        return cls(tuple(rows))


def _names(text: str) -> tuple[str, ...]:
    return tuple(name.strip() for name in text.split(",") if name.strip())


def resolve_table(path: Optional[str]) -> TemplateTable:
    return TemplateTable.load(Path(path).expanduser()) if path else TemplateTable()


def is_insertion(method: str) -> bool:
    """Update methods that store an element; the others remove."""

    return method.startswith(("add", "put", "set"))


def predicate_after_insertion(method: str) -> Optional[object]:
    """Value a predicate method returns right after an insertion into the same collection."""

    if method.startswith(("get", "value")):
        return NONNULL
    if method == "isEmpty":
        return False
    if method == "size":
        return POSITIVE
    if method.startswith("contains"):
        return True
    return None
