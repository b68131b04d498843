import unittest
from pathlib import Path

from analysis.compare import compare_stores, node_signature
from analysis.pipeline import summarize_program
from analysis.store import SummaryStore
from analysis.summary import NodeKind
from minifw import load_program

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

START = "ContextImpl.startService(Intent)"


class CompareStoresTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.truth = summarize_program(load_program([FIXTURES / "servicefw.ir"])).store

    def test_store_matches_itself(self) -> None:
        comparison = compare_stores(self.truth, self.truth)

        totals = comparison.totals()
        self.assertEqual(7, totals[NodeKind.CALLBACK].match)
        self.assertEqual(3, totals[NodeKind.PREDICATE].match)
        self.assertEqual(1, totals[NodeKind.UPDATE].match)
        for kind, counts in totals.items():
            with self.subTest(kind=kind.value):
                self.assertEqual((0, 0), (counts.missed, counts.additional))
                self.assertEqual(1.0, counts.precision)
                self.assertEqual(1.0, counts.recall)
        self.assertEqual([], comparison.missing_apis)

    def test_missing_summaries_lower_recall(self) -> None:
        partial = SummaryStore(summaries={START: self.truth.get(START)})

        comparison = compare_stores(partial, self.truth)

        callbacks = comparison.totals()[NodeKind.CALLBACK]
        self.assertEqual((3, 4, 0), (callbacks.match, callbacks.missed, callbacks.additional))
        self.assertAlmostEqual(3 / 7, callbacks.recall)
        self.assertEqual(1.0, callbacks.precision)
        self.assertEqual(
            ["ContextImpl.bindService(Intent,ServiceConnection)", "ContextImpl.unbindService(ServiceConnection)"],
            comparison.missing_apis,
        )

    def test_extra_summaries_lower_precision(self) -> None:
        partial = SummaryStore(summaries={START: self.truth.get(START)})

        comparison = compare_stores(self.truth, partial)

        callbacks = comparison.totals()[NodeKind.CALLBACK]
        self.assertAlmostEqual(3 / 7, callbacks.precision)
        self.assertEqual(1.0, callbacks.recall)
        self.assertEqual(2, len(comparison.extra_apis))

    def test_empty_stores_are_perfect(self) -> None:
        totals = compare_stores(SummaryStore(), SummaryStore()).totals()

        self.assertEqual(1.0, totals[NodeKind.UPDATE].precision)
        self.assertEqual(1.0, totals[NodeKind.UPDATE].recall)

    def test_signature_ignores_node_ids(self) -> None:
        pcs = self.truth.get(START)

        self.assertEqual(("update", ("(static, Global, started) = true",)), node_signature(pcs.node(5)))
        self.assertEqual(("predicate", "(static, Global, thread) == null"), node_signature(pcs.node(1)))
        self.assertEqual(node_signature(pcs.node(3))[:2], node_signature(pcs.node(4))[:2])


if __name__ == "__main__":  # pragma: no cover - test hook
    unittest.main()
