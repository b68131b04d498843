"""Compare a generated summary store against a ground-truth store."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .store import SummaryStore
from .summary import PCS, NodeKind, PcsNode

COMPARED_KINDS = (NodeKind.CALLBACK, NodeKind.PREDICATE, NodeKind.UPDATE)


@dataclass(slots=True)
class KindCounts:
    match: int = 0
    missed: int = 0
    additional: int = 0

    @property
    def precision(self) -> float:
        found = self.match + self.additional
        return self.match / found if found else 1.0

    @property
    def recall(self) -> float:
        expected = self.match + self.missed
        return self.match / expected if expected else 1.0

    def add(self, other: "KindCounts") -> None:
        self.match += other.match
        self.missed += other.missed
        self.additional += other.additional


@dataclass(slots=True)
class Comparison:
    per_api: dict[str, dict[NodeKind, KindCounts]] = field(default_factory=dict)
    missing_apis: list[str] = field(default_factory=list)
    extra_apis: list[str] = field(default_factory=list)

    def totals(self) -> dict[NodeKind, KindCounts]:
        totals = {kind: KindCounts() for kind in COMPARED_KINDS}
        for counts in self.per_api.values():
            for kind, item in counts.items():
                totals[kind].add(item)
        return totals


def node_signature(node: PcsNode) -> tuple:
    """Payload identity of a node; ids and statement positions are ignored."""

    if node.kind is NodeKind.CALLBACK and node.callback is not None:
        return (
            node.kind.value,
            str(node.callback.signature),
            tuple(str(item) for item in node.callback.receivers),
            node.callback.is_async,
        )
    if node.kind is NodeKind.PREDICATE:
        return (node.kind.value, str(node.expression))
    if node.kind is NodeKind.UPDATE:
        return (node.kind.value, tuple(sorted(str(update) for update in node.updates)))
    return (node.kind.value,)


def _count(found: PCS | None, truth: PCS | None, kind: NodeKind) -> KindCounts:
    produced = Counter(node_signature(node) for node in found.of_kind(kind)) if found else Counter()
    expected = Counter(node_signature(node) for node in truth.of_kind(kind)) if truth else Counter()
    matched = sum((produced & expected).values())
    return KindCounts(
        match=matched,
        missed=sum(expected.values()) - matched,
        additional=sum(produced.values()) - matched,
    )


def compare_stores(store: SummaryStore, truth: SummaryStore) -> Comparison:
    result = Comparison(
        missing_apis=sorted(set(truth.summaries) - set(store.summaries)),
        extra_apis=sorted(set(store.summaries) - set(truth.summaries)),
    )
    for api in sorted(set(store.summaries) | set(truth.summaries)):
        result.per_api[api] = {kind: _count(store.get(api), truth.get(api), kind) for kind in COMPARED_KINDS}
    return result
