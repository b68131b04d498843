import json
import unittest
from pathlib import Path

import networkx as nx
from hypothesis import given, settings
from hypothesis import strategies as st

from analysis.graphs import (
    ENTRY,
    EXIT,
    EdgeKind,
    build_call_graph,
    build_cfg,
    build_icfg,
    exit_augmented,
    influence,
    node_order,
)
from analysis.pipeline import summarize_program
from minifw import load_program
from minifw.model import Assign, Const, Goto, IfGoto, Local, MethodDef, Param, Return
from pcs_core import PreconditionError

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

_STATEMENTS = st.lists(
    st.tuples(st.sampled_from(["assign", "if", "goto", "return"]), st.integers(min_value=0, max_value=11)),
    min_size=1,
    max_size=12,
)


def _random_method(shape: list[tuple[str, int]]) -> MethodDef:
    size = len(shape)
    body = []
    for sid, (kind, target) in enumerate(shape):
        common = {"sid": sid, "labels": (f"L{sid}",)}
        label = f"L{target % size}"
        if kind == "if":
            body.append(IfGoto(left=Local("x"), op="==", right=Const.of(0), label=label, **common))
        elif kind == "goto":
            body.append(Goto(label=label, **common))
        elif kind == "return":
            body.append(Return(**common))
        else:
            body.append(Assign(target="x", value=Const.of(sid), **common))
    return MethodDef(owner="Random", name="m", locals=(Param("x", "int"),), body=tuple(body))


def _dependents_by_definition(cfg, branch: int) -> frozenset[int]:
    """Y depends on X when Y postdominates a successor of X but not X itself."""

    live = [node for node in cfg.graph.nodes if node not in cfg.unreachable]
    forward = nx.DiGraph(cfg.graph.subgraph(live))
    stuck = {node for node in live if not nx.has_path(forward, node, EXIT)}
    sinks = [
        component
        for component in nx.strongly_connected_components(forward)
        if component <= stuck and all(target in component for node in component for target in forward.successors(node))
    ]
    for component in sinks:
        forward.add_edge(min(component, key=node_order), EXIT)

    def postdominates(y: int, node: int) -> bool:
        if y == node:
            return True
        pruned = forward.copy()
        pruned.remove_node(y)
        return not nx.has_path(pruned, node, EXIT)

    found = set()
    for y in live:
        if y in (ENTRY, EXIT):
            continue
        strictly = y != branch and postdominates(y, branch)
        if strictly:
            continue
        if any(postdominates(y, target) for target in forward.successors(branch)):
            found.add(y)
    return frozenset(found)


class CfgTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.program = load_program([FIXTURES / "servicefw.ir"])

    def test_branch_has_true_and_false_edges(self) -> None:
        cfg = build_cfg(self.program.method("ContextImpl.startService(Intent)"))

        self.assertEqual([(3, EdgeKind.FALSE), (8, EdgeKind.TRUE)], cfg.successors(2))
        self.assertEqual([(12, EdgeKind.FLOW)], cfg.successors(7))
        self.assertEqual([(EXIT, EdgeKind.FLOW)], cfg.successors(13))
        self.assertEqual([(0, EdgeKind.FLOW)], cfg.successors(ENTRY))
        self.assertEqual([], cfg.successors(EXIT))
        self.assertEqual([2], cfg.branch_nodes())

    def test_control_dependents_of_service_branch(self) -> None:
        cfg = build_cfg(self.program.method("ContextImpl.startService(Intent)"))

        self.assertEqual(frozenset(range(3, 12)), cfg.control_dependents(2))
        self.assertEqual(12, cfg.immediate_postdominators()[2])
        self.assertTrue(cfg.postdominates(12, 5))
        self.assertFalse(cfg.postdominates(8, 5))

    def test_influence_of_unbind_branch(self) -> None:
        cfg = build_cfg(self.program.method("ContextImpl.doUnbind(Service)"))

        self.assertEqual(frozenset({3, 4, 5}), influence(cfg, 2))
        with self.assertRaises(PreconditionError):
            influence(cfg, 0)

    def test_unreachable_statements_are_recorded(self) -> None:
        method = _random_method([("return", 0), ("assign", 0), ("if", 1)])

        cfg = build_cfg(method)

        self.assertEqual(frozenset({1, 2}), cfg.unreachable)
        self.assertEqual([], cfg.branch_nodes())

    def test_abstract_method_has_no_cfg(self) -> None:
        with self.assertRaises(PreconditionError):
            build_cfg(MethodDef(owner="Random", name="m", is_abstract=True))

    def test_branch_inside_endless_loop(self) -> None:
        cfg = build_cfg(_random_method([("if", 1), ("goto", 0)]))

        self.assertEqual(frozenset({0, 1}), cfg.control_dependents(0))
        self.assertEqual(EXIT, cfg.immediate_postdominators()[0])
        self.assertEqual(0, cfg.immediate_postdominators()[1])
        self.assertEqual(frozenset({0, 1}), _dependents_by_definition(cfg, 0))

    def test_each_endless_loop_gets_one_exit_edge(self) -> None:
        graph = nx.DiGraph([(ENTRY, 0), (0, 1), (1, 2), (2, 1), (0, 3), (3, 3), (0, EXIT)])

        augmented = exit_augmented(graph)

        self.assertEqual([(1, EXIT), (3, EXIT)], sorted(set(augmented.edges) - set(graph.edges)))
        self.assertNotIn((1, EXIT), graph.edges)

    @settings(max_examples=200, derandomize=True, deadline=None)
    @given(_STATEMENTS)
    def test_control_dependence_matches_definition(self, shape: list[tuple[str, int]]) -> None:
        cfg = build_cfg(_random_method(shape))

        for branch in cfg.branch_nodes():
            self.assertEqual(_dependents_by_definition(cfg, branch), cfg.control_dependents(branch))


class CallGraphTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.program = load_program([FIXTURES / "servicefw.ir"])

    def test_call_graph_matches_golden(self) -> None:
        golden = json.loads((FIXTURES / "servicefw.cg.json").read_text(encoding="utf-8"))

        edges = build_call_graph(self.program).edges(include_async=False)

        self.assertEqual(golden["edges"], [edge.to_json() for edge in edges])

    def test_callers_and_callees(self) -> None:
        cg = build_call_graph(self.program)

        callers = cg.callers("ContextImpl.doUnbind(Service)")
        self.assertEqual([("ContextImpl.unbindService(ServiceConnection)", 1)], [(e.caller, e.site) for e in callers])
        self.assertEqual([], cg.callees("ContextImpl.startService(Intent)", 6))

    def test_unbind_icfg_inlines_helper(self) -> None:
        result = summarize_program(self.program, apis=["unbindService"])
        icfg = result.icfgs["ContextImpl.unbindService(ServiceConnection)"]

        self.assertEqual(13, len(icfg))
        self.assertEqual(
            [
                (("ContextImpl.unbindService(ServiceConnection)", 1), ("ContextImpl.doUnbind(Service)", ENTRY), EdgeKind.CALL),
                (("ContextImpl.doUnbind(Service)", EXIT), ("ContextImpl.unbindService(ServiceConnection)", 2), EdgeKind.RETURN),
            ],
            icfg.interprocedural_edges(),
        )

    def test_icfg_requires_api_method(self) -> None:
        cg = build_call_graph(self.program)

        with self.assertRaises(PreconditionError):
            build_icfg(self.program, self.program.method("ContextImpl.doUnbind(Service)"), cg)


if __name__ == "__main__":  # pragma: no cover - test hook
    unittest.main()
