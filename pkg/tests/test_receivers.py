import textwrap
import unittest
from pathlib import Path

from analysis.backward import AccessPath, Scope
from analysis.callbacks import CallSite, callback_signatures, find_call_chains, link_async_handlers
from analysis.graphs import CfgCache, build_call_graph
from analysis.receivers import (
    THIS_RECEIVER,
    UNKNOWN_RECEIVER,
    ReceiverSpec,
    backward_alias,
    match_receiver,
    normalize,
    resolve_receivers,
)
from minifw import load_program, parse_program
from pcs_core import PreconditionError

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

SOURCE = """
framework public class Listener {
    public void onEvent() {
        return;
    }
}
framework public class Source {
    public Listener saved;
    public void onReady() {
        return;
    }
    public final api void fire(Listener l) {
        virtual l.onEvent();
        return;
    }
    public final api void ready() {
        virtual this.onReady();
        return;
    }
    public final api void fireFresh() {
        Listener l;
        l = new Listener;
        virtual l.onEvent();
        return;
    }
}
"""


def _receivers(program, api: str) -> dict[CallSite, frozenset[ReceiverSpec]]:
    linked = link_async_handlers(program, build_call_graph(program))
    found = find_call_chains(program, linked.call_graph, callback_signatures(program))
    resolutions = resolve_receivers(found.for_api(api), CfgCache(program))
    return {item.site: item.receivers for item in resolutions}


class ReceiverTests(unittest.TestCase):
    def test_receiver_through_message_field(self) -> None:
        program = load_program([FIXTURES / "servicefw.ir"])

        found = _receivers(program, "ContextImpl.startService(Intent)")

        service = frozenset({ReceiverSpec("param", 0, ("service",))})
        self.assertEqual(
            {
                CallSite("ActivityThreadHandler.handleMessage(Message)", 1): service,
                CallSite("ActivityThreadHandler.handleMessage(Message)", 2): service,
                CallSite("ServiceArgsHandler.handleMessage(Message)", 1): service,
            },
            found,
        )
        self.assertEqual("param(0).service", str(next(iter(service))))

    def test_receiver_through_helper_parameter(self) -> None:
        program = load_program([FIXTURES / "servicefw.ir"])

        found = _receivers(program, "ContextImpl.unbindService(ServiceConnection)")

        self.assertEqual(
            {frozenset({ReceiverSpec("param", 0, ("service",))})},
            set(found.values()),
        )

    def test_parameter_this_and_fresh_objects(self) -> None:
        program = parse_program(textwrap.dedent(SOURCE))

        self.assertEqual(
            {CallSite("Source.fire(Listener)", 0): frozenset({ReceiverSpec("param", 0)})},
            _receivers(program, "Source.fire(Listener)"),
        )
        self.assertEqual(
            {CallSite("Source.ready()", 0): frozenset({THIS_RECEIVER})},
            _receivers(program, "Source.ready()"),
        )
        self.assertEqual(
            {CallSite("Source.fireFresh()", 1): frozenset({UNKNOWN_RECEIVER})},
            _receivers(program, "Source.fireFresh()"),
        )

    def test_alias_requires_receiver_local(self) -> None:
        program = parse_program(textwrap.dedent(SOURCE))
        linked = link_async_handlers(program, build_call_graph(program))
        found = find_call_chains(program, linked.call_graph, callback_signatures(program))
        chain = found.chains[CallSite("Source.fire(Listener)", 0)][0]
        cfgs = CfgCache(program)

        paths, lost = backward_alias("l", chain, cfgs)

        self.assertEqual(frozenset({AccessPath(Scope.PARAM, "", 0)}), paths)
        self.assertFalse(lost)
        with self.assertRaises(PreconditionError):
            backward_alias("this", chain, cfgs)

    def test_match_and_normalize(self) -> None:
        self.assertEqual(THIS_RECEIVER, match_receiver(AccessPath(Scope.CALLING_OBJECT)))
        self.assertIsNone(match_receiver(AccessPath(Scope.CALLING_OBJECT, chain=("saved",))))
        self.assertIsNone(match_receiver(AccessPath.static("Global", ("thread",))))
        self.assertEqual(frozenset({UNKNOWN_RECEIVER}), normalize([]))
        self.assertEqual(frozenset({THIS_RECEIVER}), normalize([THIS_RECEIVER, UNKNOWN_RECEIVER]))


if __name__ == "__main__":  # pragma: no cover - test hook
    unittest.main()
