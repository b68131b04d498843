import json
import tempfile
import unittest
from pathlib import Path

from analysis.pipeline import summarize_program
from analysis.store import STORE_VERSION, SummaryStore, dumps_store, load_store, loads_store, save_store
from analysis.summary import NodeKind
from minifw import load_program
from pcs_core import AnalysisConfig, PcsError, StoreFormatError

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


class SummaryStoreTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        program = load_program([FIXTURES / "servicefw.ir"])
        cls.store = summarize_program(program, AnalysisConfig(seed=3)).store

    def test_saved_store_loads_back(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir, "out", "service.pcs.json")
            save_store(self.store, path)

            loaded = load_store(path)

            self.assertEqual(path.read_text(encoding="utf-8"), dumps_store(loaded))
        self.assertEqual(sorted(self.store.summaries), sorted(loaded.summaries))
        pcs = loaded.get("ContextImpl.startService(Intent)")
        self.assertEqual(NodeKind.UPDATE, pcs.node(5).kind)
        self.assertEqual("(static, Global, started) = true", pcs.node(5).describe())

    def test_metadata_records_settings(self) -> None:
        data = json.loads(dumps_store(self.store))

        self.assertEqual(STORE_VERSION, data["version"])
        self.assertEqual(3, data["metadata"]["seed"])
        self.assertEqual("pcs-summarizer", data["metadata"]["tool"])
        self.assertEqual(
            ["ContextImpl.bindService(Intent,ServiceConnection)", "ContextImpl.startService(Intent)",
             "ContextImpl.unbindService(ServiceConnection)"],
            list(data["summaries"]),
        )

    def test_empty_store(self) -> None:
        loaded = loads_store(dumps_store(SummaryStore()))

        self.assertEqual({}, loaded.summaries)
        self.assertNotIn("ContextImpl.startService(Intent)", loaded)
        self.assertIsNone(loaded.get("ContextImpl.startService(Intent)"))

    def test_missing_nodes_are_reported(self) -> None:
        text = json.dumps({"version": 1, "metadata": {}, "summaries": {"A.f()": {"api": "A.f()", "edges": []}}})

        with self.assertRaises(StoreFormatError) as caught:
            loads_store(text, source="broken.json")

        self.assertEqual("broken.json: missing field nodes in summary A.f()", caught.exception.message)

    def test_unsupported_version(self) -> None:
        with self.assertRaises(StoreFormatError) as caught:
            loads_store(json.dumps({"version": 2, "metadata": {}, "summaries": {}}))

        self.assertIn("unsupported store version 2", caught.exception.message)

    def test_malformed_json(self) -> None:
        with self.assertRaises(StoreFormatError) as caught:
            loads_store("{not json", source="bad.json")

        self.assertTrue(caught.exception.message.startswith("bad.json: malformed JSON"))

    def test_invalid_edge_label(self) -> None:
        summary = {
            "api": "A.f()",
            "nodes": [{"id": 0, "kind": "entry"}, {"id": 1, "kind": "exit"}],
            "edges": [{"source": 0, "target": 1, "label": "maybe"}],
        }

        with self.assertRaises(StoreFormatError) as caught:
            loads_store(json.dumps({"version": 1, "metadata": {}, "summaries": {"A.f()": summary}}))

        self.assertIn("summaries.A.f().edges.0.label", caught.exception.message)

    def test_missing_store_file(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            with self.assertRaises(PcsError):
                load_store(Path(tmpdir, "absent.json"))

    def test_edge_to_unknown_node(self) -> None:
        summary = {
            "api": "A.f()",
            "nodes": [{"id": 0, "kind": "entry"}, {"id": 1, "kind": "exit"}],
            "edges": [{"source": 0, "target": 1}, {"source": 1, "target": 7}],
        }

        with self.assertRaises(StoreFormatError) as caught:
            loads_store(json.dumps({"version": 1, "metadata": {}, "summaries": {"A.f()": summary}}), source="s.json")

        self.assertEqual(
            "s.json: edge 1 of summary A.f() refers to node 7, summary has 2 nodes", caught.exception.message
        )

    def test_node_ids_follow_positions(self) -> None:
        summary = {
            "api": "A.f()",
            "nodes": [{"id": 0, "kind": "entry"}, {"id": 4, "kind": "exit"}],
            "edges": [{"source": 0, "target": 1}],
        }

        with self.assertRaises(StoreFormatError) as caught:
            loads_store(json.dumps({"version": 1, "metadata": {}, "summaries": {"A.f()": summary}}))

        self.assertIn("node at position 1 of summary A.f() has id 4", caught.exception.message)

    def test_unreadable_store_is_reported_by_path(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            directory = Path(tmpdir, "store.json")
            directory.mkdir()
            undecodable = Path(tmpdir, "latin.json")
            undecodable.write_bytes(b'{"version": 1, "metadata": {"tool": "caf\xe9"}}')

            for path in (directory, undecodable):
                with self.subTest(path=path.name):
                    with self.assertRaises(PcsError) as caught:
                        load_store(path)

                    self.assertIn(f"Cannot read summary store {path}", caught.exception.message)


if __name__ == "__main__":  # pragma: no cover - test hook
    unittest.main()
