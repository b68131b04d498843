"""Versioned JSON store of predicate callback summaries."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, ValidationError

from pcs_core.errors import PcsError, StoreFormatError

from .summary import PCS

logger = logging.getLogger(__name__)

STORE_VERSION = 1


class _NodeModel(BaseModel):
    model_config = ConfigDict(extra="allow")

    id: int
    kind: Literal["entry", "exit", "callback", "predicate", "update"]


class _EdgeModel(BaseModel):
    source: int
    target: int
    label: Optional[Literal["true", "false"]] = None


class _SummaryModel(BaseModel):
    api: str
    icfg_nodes: int = 0
    nodes: list[_NodeModel]
    edges: list[_EdgeModel]


class _StoreModel(BaseModel):
    version: int
    metadata: dict[str, Any]
    summaries: dict[str, _SummaryModel]


@dataclass(slots=True)
class SummaryStore:
    """Summaries keyed by API method key, plus the settings that produced them."""

    summaries: dict[str, PCS] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    def get(self, api: str) -> Optional[PCS]:
        return self.summaries.get(api)

    def __contains__(self, api: object) -> bool:
        return api in self.summaries

    def to_json(self) -> dict[str, Any]:
        return {
            "version": STORE_VERSION,
            "metadata": self.metadata,
            "summaries": {key: self.summaries[key].to_json() for key in sorted(self.summaries)},
        }


def dumps_store(store: SummaryStore) -> str:
    return json.dumps(store.to_json(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def save_store(store: SummaryStore, path: Path) -> None:
    """Write canonical JSON; identical stores give identical bytes."""

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps_store(store), encoding="utf-8")
    except OSError as exc:
        raise PcsError(f"Cannot write summary store {path}: {exc}") from exc
    logger.debug("Saved summary store", extra={"path": str(path), "summaries": len(store.summaries)})


def load_store(path: Path) -> SummaryStore:
    if not path.exists():
        raise PcsError(f"Input file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise PcsError(f"Cannot read summary store {path}: {exc}") from exc
    return loads_store(text, source=str(path))


def loads_store(text: str, *, source: str = "<store>") -> SummaryStore:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StoreFormatError(f"{source}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    if isinstance(raw, dict) and raw.get("version", STORE_VERSION) != STORE_VERSION:
        raise StoreFormatError(f"{source}: unsupported store version {raw.get('version')!r}")

    try:
        model = _StoreModel.model_validate(raw)
    except ValidationError as exc:
        raise StoreFormatError(f"{source}: {_describe(exc)}") from exc
    for key, summary in model.summaries.items():
        _check_ids(summary, key, source)

    summaries: dict[str, PCS] = {}
    for key, data in raw["summaries"].items():
        try:
            summaries[key] = PCS.from_json(data)
        except KeyError as exc:
            raise StoreFormatError(f"{source}: missing field {exc.args[0]} in summary {key}") from exc
        except (TypeError, ValueError) as exc:
            raise StoreFormatError(f"{source}: invalid summary {key} ({exc})") from exc
    return SummaryStore(summaries=summaries, metadata=dict(raw["metadata"]))


def _describe(exc: ValidationError) -> str:
    first = exc.errors()[0]
    location = [str(part) for part in first["loc"]]
    if first["type"] == "missing":
        if len(location) >= 3 and location[0] == "summaries":
            return f"missing field {location[-1]} in summary {location[1]}"
        return f"missing field {location[-1]}"
    return f"invalid value at {'.'.join(location)}: {first['msg']}"


def _check_ids(summary: _SummaryModel, key: str, source: str) -> None:
    """Node ids must equal their position and edges must join existing nodes."""

    count = len(summary.nodes)
    for position, node in enumerate(summary.nodes):
        if node.id != position:
            raise StoreFormatError(f"{source}: node at position {position} of summary {key} has id {node.id}")
    for position, edge in enumerate(summary.edges):
        for end in (edge.source, edge.target):
            if not 0 <= end < count:
                raise StoreFormatError(
                    f"{source}: edge {position} of summary {key} refers to node {end}, summary has {count} nodes"
                )
