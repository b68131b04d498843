import textwrap
import unittest
from pathlib import Path

import networkx as nx

from analysis.graphs import ENTRY, EXIT, EdgeKind
from analysis.pipeline import ApiStats, summarize_program
from analysis.receivers import ReceiverSpec
from analysis.summary import PCS, NodeKind
from minifw import load_program, parse_program

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

START = "ContextImpl.startService(Intent)"
UNBIND = "ContextImpl.unbindService(ServiceConnection)"
SERVICE_PARAM = (ReceiverSpec("param", 0, ("service",)),)


def _shape(pcs: PCS) -> tuple[list[str], list[tuple[int, int, object]]]:
    kinds = [node.kind.value for node in pcs.nodes]
    edges = [(edge.source, edge.target, edge.label) for edge in pcs.edges]
    return kinds, edges


def _icfg_node(pcs: PCS, node_id: int, icfg) -> tuple[str, int]:
    node = pcs.node(node_id)
    if node.kind is NodeKind.ENTRY:
        return icfg.entry
    if node.kind is NodeKind.EXIT:
        return icfg.exit
    return (node.method, node.sid)


def _realizable_sequences(icfg, marks) -> set[tuple]:
    """Marked nodes, with the branch taken at predicates, along every complete ICFG path."""

    sequences: set[tuple] = set()
    calls = (EdgeKind.CALL, EdgeKind.ASYNC_CALL)

    def walk(node, stack: tuple, seen: frozenset, trail: tuple) -> None:
        if (node, stack) in seen:
            return
        seen = seen | {(node, stack)}
        if node[1] == EXIT:
            if not stack:
                sequences.add(trail)
                return
            for target, _ in icfg.intra_successors(stack[-1]):
                walk(target, stack[:-1], seen, trail)
            return
        entered = [(target, kind) for target, kind in icfg.successors(node) if kind in calls]
        steps = [(target, stack + (node,), kind) for target, kind in entered]
        if not entered:
            steps = [(target, stack, kind) for target, kind in icfg.intra_successors(node)]
        for target, next_stack, kind in steps:
            step = trail
            if node in marks:
                label = kind.value if node in marks.predicates and kind.is_branch else None
                step = trail + ((node, label),)
            walk(target, next_stack, seen, step)

    walk(icfg.entry, (), frozenset(), ())
    return sequences


def _summary_sequences(pcs: PCS, icfg) -> set[tuple]:
    sequences: set[tuple] = set()
    last = len(pcs) - 1

    def walk(node_id: int, trail: tuple) -> None:
        if len(trail) > len(pcs):
            return
        for edge in pcs.successors(node_id):
            step = trail
            if edge.source != 0:
                step = trail + ((_icfg_node(pcs, edge.source, icfg), edge.label),)
            if edge.target == last:
                sequences.add(step)
            else:
                walk(edge.target, step)

    walk(0, ())
    return sequences


class ServiceSummaryTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.program = load_program([FIXTURES / "servicefw.ir"])
        cls.result = summarize_program(cls.program)

    def test_start_service_structure(self) -> None:
        pcs = self.result.store.get(START)

        kinds, edges = _shape(pcs)
        self.assertEqual(["entry", "predicate", "callback", "callback", "callback", "update", "exit"], kinds)
        self.assertEqual(
            [(0, 1, None), (1, 2, "true"), (1, 3, "false"), (2, 4, None), (3, 5, None), (4, 5, None), (5, 6, None)],
            edges,
        )

    def test_start_service_payloads(self) -> None:
        pcs = self.result.store.get(START)

        self.assertEqual("(static, Global, thread) == null", pcs.node(1).describe())
        self.assertEqual("ContextImpl.startService#2", pcs.node(1).location)
        self.assertEqual(
            [
                ("onCreate", "ActivityThreadHandler.handleMessage#1"),
                ("onStartCommand", "ServiceArgsHandler.handleMessage#1"),
                ("onStartCommand", "ActivityThreadHandler.handleMessage#2"),
            ],
            [(pcs.node(i).callback.signature.name, pcs.node(i).location) for i in (2, 3, 4)],
        )
        for node_id in (2, 3, 4):
            with self.subTest(node=node_id):
                self.assertTrue(pcs.node(node_id).callback.is_async)
                self.assertEqual(SERVICE_PARAM, pcs.node(node_id).callback.receivers)
        self.assertEqual("(static, Global, started) = true", pcs.node(5).describe())
        self.assertEqual("Global.started = true", pcs.node(5).text)

    def test_unbind_service_structure(self) -> None:
        pcs = self.result.store.get(UNBIND)

        kinds, edges = _shape(pcs)
        self.assertEqual(["entry", "callback", "predicate", "callback", "exit"], kinds)
        self.assertEqual([(0, 1, None), (1, 2, None), (2, 3, "true"), (2, 4, "false"), (3, 4, None)], edges)
        self.assertEqual("onUnbind", pcs.node(1).callback.signature.name)
        self.assertFalse(pcs.node(1).callback.is_async)
        self.assertEqual("(static, Global, started) != true", str(pcs.node(2).expression))
        self.assertEqual("onDestroy", pcs.node(3).callback.signature.name)

    def test_summary_edges_follow_icfg_paths(self) -> None:
        for api, pcs in self.result.store.summaries.items():
            icfg = self.result.icfgs[api]
            with self.subTest(api=api):
                self.assertLessEqual(len(pcs), len(icfg))
                self.assertEqual(len(icfg), pcs.icfg_nodes)
                self.assertEqual([], pcs.predecessors(0))
                self.assertEqual([], pcs.successors(len(pcs) - 1))
                for edge in pcs.edges:
                    source = _icfg_node(pcs, edge.source, icfg)
                    target = _icfg_node(pcs, edge.target, icfg)
                    self.assertTrue(nx.has_path(icfg.graph, source, target), f"{source} -> {target}")
                    if edge.label is not None:
                        self.assertIs(NodeKind.PREDICATE, pcs.node(edge.source).kind)

    def test_edge_labels_are_branch_outcomes(self) -> None:
        for api, pcs in self.result.store.summaries.items():
            with self.subTest(api=api):
                for edge in pcs.edges:
                    self.assertIn(edge.label, (None, "true", "false"))
                labelled = [edge for edge in pcs.edges if edge.label is not None]
                self.assertEqual(
                    sorted(["true", "false"] * len(pcs.of_kind(NodeKind.PREDICATE))),
                    sorted(edge.label for edge in labelled),
                )

    def test_every_marked_node_is_summarized(self) -> None:
        for api, marks in self.result.marks.items():
            pcs = self.result.store.get(api)
            with self.subTest(api=api):
                summarized = {(node.method, node.sid) for node in pcs.nodes if node.method is not None}
                self.assertEqual(marks.nodes(), summarized)

    def test_stats_line(self) -> None:
        stats = {item.api: item for item in self.result.stats}

        self.assertEqual(f"{UNBIND}\t13\t5\t2\t1\t0", stats[UNBIND].tsv())
        self.assertEqual(7, stats[START].pcs)
        self.assertEqual(3, stats[START].callbacks)


class PathSequenceTests(unittest.TestCase):
    def test_summary_paths_match_realizable_icfg_paths(self) -> None:
        compared = 0
        for fixture in ("servicefw.ir", "loaders.ir"):
            result = summarize_program(load_program([FIXTURES / fixture]))
            for api, pcs in result.store.summaries.items():
                icfg = result.icfgs[api]
                if len(icfg) > 50:
                    continue
                compared += 1
                with self.subTest(api=api):
                    expected = _realizable_sequences(icfg, result.marks[api])
                    self.assertTrue(expected)
                    self.assertEqual(expected, _summary_sequences(pcs, icfg))

        self.assertGreaterEqual(compared, 4)


class SummarySizeTests(unittest.TestCase):
    def test_large_method_shrinks_to_four_nodes(self) -> None:
        program = load_program([FIXTURES / "large.ir"])

        result = summarize_program(program)

        pcs = result.store.get("BatchWorker.runBatch(WorkListener,int)")
        stats = result.stats[0]
        self.assertEqual(["entry", "predicate", "callback", "exit"], _shape(pcs)[0])
        self.assertEqual([(0, 1, None), (1, 2, "true"), (1, 3, "false"), (2, 3, None)], _shape(pcs)[1])
        self.assertGreater(stats.icfg, 100)
        self.assertGreaterEqual(stats.reduction, 0.78)
        self.assertEqual("(param(1), int) > 0", pcs.node(1).describe())

    def test_api_without_callbacks_is_empty(self) -> None:
        program = parse_program(
            textwrap.dedent(
                """
                framework public class Counter {
                    public int value;
                    public final api void bump() {
                        int n;
                        n = this.value;
                        n = n + 1;
                        this.value = n;
                        return;
                    }
                }
                """
            )
        )

        pcs = summarize_program(program).store.get("Counter.bump()")

        self.assertTrue(pcs.is_empty)
        self.assertEqual(([NodeKind.ENTRY.value, NodeKind.EXIT.value], [(0, 1, None)]), _shape(pcs))
        self.assertEqual(ApiStats("Counter.bump()", 6, 2, 0, 0, 0), summarize_program(program).stats[0])


class IcfgEndpointTests(unittest.TestCase):
    def test_entry_and_exit_nodes(self) -> None:
        program = load_program([FIXTURES / "servicefw.ir"])
        icfg = summarize_program(program, apis=[START]).icfgs[START]

        self.assertEqual((START, ENTRY), icfg.entry)
        self.assertEqual((START, EXIT), icfg.exit)


if __name__ == "__main__":  # pragma: no cover - test hook
    unittest.main()
