import textwrap
import unittest
from pathlib import Path

from analysis.backward import Scope
from analysis.callbacks import CallChain, CallSite, callback_signatures, find_call_chains, link_async_handlers
from analysis.graphs import CfgCache, build_call_graph
from analysis.predicates import (
    AbstractExpr,
    AbstractVariable,
    Arithmetic,
    Term,
    back_substitute,
    find_predicates,
    identify_predicate_nodes,
)
from minifw import Const, load_program, parse_program
from minifw.model import NULL, TRUE
from pcs_core import PreconditionError

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

INIT_LOADER = "LoaderManager.initLoader(int,LoaderCallbacks)"

GATES = """
framework public class Listener {
    public void onEvent() {
        return;
    }
}
framework public class Gate {
    public static boolean open() {
        return true;
    }
    public final api void guarded(Listener l) {
        boolean ok;
        ok = static Gate.open();
        if ok == true goto RUN;
        return;
      RUN:
        virtual l.onEvent();
        return;
    }
    public final api void counted(Listener l, int c) {
        int n;
        n = c + 1;
        if n > 0 goto RUN;
        return;
      RUN:
        virtual l.onEvent();
        return;
    }
}
"""


def _predicates(program, api: str):
    linked = link_async_handlers(program, build_call_graph(program))
    found = find_call_chains(program, linked.call_graph, callback_signatures(program))
    return find_predicates(found.for_api(api), CfgCache(program))


class PredicateTests(unittest.TestCase):
    def test_loader_predicate_has_two_terms(self) -> None:
        program = load_program([FIXTURES / "loaders.ir"])
        chain = CallChain((INIT_LOADER,), (10,))

        expression = back_substitute(CallSite(INIT_LOADER, 8), chain, CfgCache(program))

        def manager(*path: str) -> AbstractVariable:
            return AbstractVariable(Scope.CALLING_OBJECT, "LoaderManager", -1, path)

        self.assertEqual(
            AbstractExpr(
                (
                    Term(manager("mLoaders", "get()", "mHaveData"), "==", TRUE),
                    Term(manager("oldLoader", "mHaveData"), "==", TRUE),
                ),
                False,
            ),
            expression,
        )
        self.assertEqual(
            "(calling-object, LoaderManager, mLoaders.get().mHaveData) == true"
            " ∨ (calling-object, LoaderManager, oldLoader.mHaveData) == true",
            str(expression),
        )

    def test_branches_guarding_a_statement(self) -> None:
        program = load_program([FIXTURES / "loaders.ir"])
        cfg = CfgCache(program)[INIT_LOADER]

        self.assertEqual([8], identify_predicate_nodes(cfg, 10))
        self.assertEqual([2], identify_predicate_nodes(cfg, 4))
        self.assertEqual([], identify_predicate_nodes(cfg, 7))
        with self.assertRaises(PreconditionError):
            identify_predicate_nodes(cfg, 99)

    def test_service_predicate_reads_static_field(self) -> None:
        program = load_program([FIXTURES / "servicefw.ir"])

        found = _predicates(program, "ContextImpl.startService(Intent)")

        thread = AbstractVariable(Scope.STATIC, "Global", -1, ("thread",))
        self.assertEqual(
            {CallSite("ContextImpl.startService(Intent)", 2): AbstractExpr((Term(thread, "==", NULL),))},
            found.expressions,
        )
        self.assertEqual("(static, Global, thread) == null", str(found.expressions[CallSite(
            "ContextImpl.startService(Intent)", 2
        )]))

    def test_unbind_predicate_inside_helper(self) -> None:
        program = load_program([FIXTURES / "servicefw.ir"])

        found = _predicates(program, "ContextImpl.unbindService(ServiceConnection)")

        self.assertEqual(
            ["(static, Global, started) != true"],
            [str(expression) for expression in found.expressions.values()],
        )
        self.assertEqual([CallSite("ContextImpl.doUnbind(Service)", 2)], list(found.expressions))

    def test_static_call_result_is_unresolved(self) -> None:
        program = parse_program(textwrap.dedent(GATES))

        found = _predicates(program, "Gate.guarded(Listener)")

        expression = found.expressions[CallSite("Gate.guarded(Listener)", 1)]
        self.assertEqual((), expression.terms)
        self.assertTrue(expression.unresolved)
        self.assertEqual("?", str(expression))

    def test_arithmetic_is_substituted(self) -> None:
        program = parse_program(textwrap.dedent(GATES))

        found = _predicates(program, "Gate.counted(Listener,int)")

        count = AbstractVariable(Scope.PARAM, "int", 1)
        expected = Term(Arithmetic("+", count, Const.of(1)), ">", Const.of(0))
        self.assertEqual(
            AbstractExpr((expected,)),
            found.expressions[CallSite("Gate.counted(Listener,int)", 1)],
        )
        self.assertEqual("((param(1), int) + 1) > 0", str(expected))

    def test_disjunction_is_capped(self) -> None:
        variable = AbstractVariable(Scope.STATIC, "Global", -1, ("thread",))
        terms = [Term(variable, "==", Const.of(value)) for value in range(4)]

        capped = AbstractExpr.of(terms, max_terms=3)
        merged = AbstractExpr.of(terms[:2]).merge(AbstractExpr.of(terms[1:3]))

        self.assertEqual(AbstractExpr((), True), capped)
        self.assertEqual(3, len(merged.terms))
        self.assertFalse(merged.unresolved)
        self.assertTrue(AbstractExpr.of([]).unresolved)


if __name__ == "__main__":  # pragma: no cover - test hook
    unittest.main()
