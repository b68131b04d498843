import textwrap
import unittest
from pathlib import Path

from analysis.client import (
    APP,
    NONNULL_VALUE,
    POSITIVE_VALUE,
    SUMMARY,
    GNode,
    apply_summaries,
    build_inter_callback_icfg,
    compare,
    detect_infeasible_paths,
    enumerate_callback_paths,
    infeasible_edges,
    top_level_methods,
)
from analysis.pipeline import summarize_program
from analysis.store import SummaryStore
from minifw import load_program, parse_sources
from minifw.model import FALSE, NULL, TRUE, Const
from pcs_core import PreconditionError

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

START = "ContextImpl.startService(Intent)"
UNBIND = "ContextImpl.unbindService(ServiceConnection)"
INIT_LOADER = "LoaderManager.initLoader(int,LoaderCallbacks)"


def _summarized(framework: str, app: str):
    store = summarize_program(load_program([FIXTURES / framework])).store
    return load_program([FIXTURES / framework, FIXTURES / app]), store


class ServiceClientTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.program, cls.store = _summarized("servicefw.ir", "connectbot.ir")
        cls.results = {result.top.key: result for result in apply_summaries(cls.program, cls.store)}

    def test_top_level_methods(self) -> None:
        tops = top_level_methods(self.program, self.store)

        self.assertEqual(["HostListActivity.onStart()", "HostListActivity.onStop()"], [item.key for item in tops])
        self.assertEqual(sorted(self.results), [item.key for item in tops])

    def test_destroy_after_start_is_infeasible(self) -> None:
        result = self.results["HostListActivity.onStart()"]

        self.assertEqual(1, len(result.reports))
        report = result.reports[0]
        self.assertEqual("HostListActivity.onStart()#8", report.call_site)
        self.assertEqual("ContextImpl.doUnbind(Service)#2", report.branch)
        self.assertTrue(report.outcome)
        self.assertEqual("(static, Global, started) != true", report.expression)
        self.assertEqual(GNode(SUMMARY, ("HostListActivity.onStart()#8",), UNBIND, 2), report.predicate)
        self.assertEqual(GNode(SUMMARY, ("HostListActivity.onStart()#4",), START, 5), report.resolver)
        self.assertEqual(report.resolver, report.witness[0])
        self.assertEqual(report.predicate, report.witness[-1])
        self.assertEqual(
            "HostListActivity.onStart()#8/ContextImpl.unbindService(ServiceConnection)@2",
            report.to_json()["predicate"],
        )
        self.assertEqual("true", report.to_json()["outcome"])

    def test_stop_alone_reports_nothing(self) -> None:
        result = self.results["HostListActivity.onStop()"]

        self.assertEqual([], result.reports)
        self.assertEqual(result.paths, result.filtered)
        self.assertTrue(any("TrackRecordingService.onDestroy" in item for item in result.paths.sequences))

    def test_filtered_paths_drop_destroy(self) -> None:
        result = self.results["HostListActivity.onStart()"]

        self.assertGreaterEqual(result.paths.longest, 3)
        self.assertTrue(any("TrackRecordingService.onDestroy" in item for item in result.paths.sequences))
        self.assertFalse(any("TrackRecordingService.onDestroy" in item for item in result.filtered.sequences))
        self.assertLessEqual(set(result.filtered.sequences), set(result.paths.sequences))
        for sequence in result.paths.sequences:
            with self.subTest(sequence=sequence):
                self.assertEqual("HostListActivity.onStart", sequence[0])

    def test_counts_for_top_level_method(self) -> None:
        result = self.results["HostListActivity.onStart()"]

        self.assertEqual(3, result.api_calls)
        self.assertEqual(5, result.callbacks)
        self.assertEqual([3, 2, 2], result.impl_edge_counts())
        self.assertEqual((2, 2.33, 3), result.impl_edge_summary())

    def test_infeasible_edges_are_the_contradicted_outcome(self) -> None:
        result = self.results["HostListActivity.onStart()"]

        blocked = infeasible_edges(result.graph, result.reports)

        self.assertEqual(1, len(blocked))
        source, target, key = blocked.pop()
        self.assertEqual(result.reports[0].predicate, source)
        self.assertEqual(("summary", "true"), key)
        self.assertEqual(GNode(SUMMARY, ("HostListActivity.onStart()#8",), UNBIND, 3), target)

    def test_callback_without_api_calls_has_no_paths(self) -> None:
        method = self.program.method("TrackRecordingService.onCreate()")
        graph = build_inter_callback_icfg(self.program, self.store, method)

        self.assertEqual([], enumerate_callback_paths(graph).sequences)
        self.assertEqual(0, enumerate_callback_paths(graph).longest)
        self.assertEqual([], detect_infeasible_paths(graph, self.program))

    def test_path_bound_must_be_positive(self) -> None:
        graph = self.results["HostListActivity.onStart()"].graph

        with self.assertRaises(PreconditionError):
            enumerate_callback_paths(graph, 0)
        self.assertTrue(enumerate_callback_paths(graph, 1).truncated)
        self.assertEqual(1, len(enumerate_callback_paths(graph, 1).sequences))

    def test_framework_method_is_not_a_top(self) -> None:
        with self.assertRaises(PreconditionError):
            build_inter_callback_icfg(self.program, self.store, self.program.method(START))

    def test_missing_summary_passes_through(self) -> None:
        method = self.program.method("HostListActivity.onStart()")

        graph = build_inter_callback_icfg(self.program, SummaryStore(), method)

        self.assertEqual({}, graph.spliced)
        self.assertEqual(3, len(graph.diagnostics))
        self.assertIn(GNode(APP, (), "HostListActivity.onStart()", 8), graph.pass_through)
        self.assertEqual([], enumerate_callback_paths(graph).sequences)

    def test_named_tops_and_disabled_detection(self) -> None:
        results = apply_summaries(self.program, self.store, tops=["HostListActivity.onStart"], infeasible=False)

        self.assertEqual(["HostListActivity.onStart()"], [item.top.key for item in results])
        self.assertEqual([], results[0].reports)
        self.assertEqual(results[0].paths, results[0].filtered)


class OpaqueCallTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        extra = textwrap.dedent(
            """
            framework public class Resetter {
                public void reset() {
                    Global.started = false;
                    return;
                }
            }

            app class ResettingActivity extends Activity {
                public void onStart() {
                    Intent intent;
                    TrackerConnection conn;
                    Resetter r;
                    intent = new Intent;
                    intent.service = "TrackRecordingService";
                    conn = new TrackerConnection;
                    virtual this.startService(intent);
                    virtual this.bindService(intent, conn);
                    r = new Resetter;
                    virtual r.reset();
                    virtual this.unbindService(conn);
                    return;
                }
            }

            app class PlainActivity extends Activity {
                public void onStart() {
                    Intent intent;
                    TrackerConnection conn;
                    intent = new Intent;
                    intent.service = "TrackRecordingService";
                    conn = new TrackerConnection;
                    virtual this.startService(intent);
                    virtual this.bindService(intent, conn);
                    virtual this.unbindService(conn);
                    return;
                }
            }
            """
        )
        paths = (FIXTURES / "servicefw.ir", FIXTURES / "connectbot.ir")
        sources = [(path.read_text(encoding="utf-8"), path.name) for path in paths]
        cls.program = parse_sources(sources + [(extra, "resetter.ir")])
        cls.store = summarize_program(load_program([FIXTURES / "servicefw.ir"])).store

    def test_framework_call_without_summary_kills_the_query(self) -> None:
        result = apply_summaries(self.program, self.store, tops=["ResettingActivity.onStart"])[0]

        self.assertEqual("Resetter.reset()", result.graph.pass_through[GNode(APP, (), "ResettingActivity.onStart()", 6)])
        self.assertEqual([], result.reports)

    def test_same_calls_without_reset_are_reported(self) -> None:
        result = apply_summaries(self.program, self.store, tops=["PlainActivity.onStart"])[0]

        self.assertEqual(["PlainActivity.onStart()#5"], [report.call_site for report in result.reports])
        self.assertEqual({}, result.graph.pass_through)


class LoaderClientTests(unittest.TestCase):
    def test_second_init_cannot_create_again(self) -> None:
        program, store = _summarized("loaders.ir", "loaders_app.ir")

        results = apply_summaries(program, store)

        self.assertEqual(["BrowserFragment.onStart()"], [item.top.key for item in results])
        reports = results[0].reports
        self.assertEqual(1, len(reports))
        self.assertEqual("BrowserFragment.onStart()#6", reports[0].call_site)
        self.assertEqual(f"{INIT_LOADER}#2", reports[0].branch)
        self.assertTrue(reports[0].outcome)
        twice = ("BrowserFragment.onStart", "BrowserFragment.onCreateLoader", "BrowserFragment.onCreateLoader")
        self.assertIn(twice, results[0].paths.sequences)
        self.assertNotIn(twice, results[0].filtered.sequences)


class CompareTests(unittest.TestCase):
    def test_constants(self) -> None:
        self.assertIs(True, compare("==", TRUE, TRUE))
        self.assertIs(True, compare("!=", TRUE, FALSE))
        self.assertIs(False, compare("==", NULL, Const.of(0)))
        self.assertIs(True, compare("<", Const.of(1), Const.of(2)))
        self.assertIs(False, compare(">=", Const.of(1), Const.of(2)))
        self.assertIsNone(compare("<", TRUE, TRUE))

    def test_template_guarantees(self) -> None:
        self.assertIs(False, compare("==", NONNULL_VALUE, NULL))
        self.assertIs(True, compare("!=", NULL, NONNULL_VALUE))
        self.assertIsNone(compare("==", NONNULL_VALUE, Const.of(1)))
        self.assertIs(True, compare(">", POSITIVE_VALUE, Const.of(0)))
        self.assertIs(True, compare("<", Const.of(0), POSITIVE_VALUE))
        self.assertIs(False, compare("<=", POSITIVE_VALUE, Const.of(0)))
        self.assertIsNone(compare(">", POSITIVE_VALUE, Const.of(3)))


if __name__ == "__main__":  # pragma: no cover - test hook
    unittest.main()
