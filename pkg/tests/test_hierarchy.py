import unittest
from pathlib import Path

from minifw import Signature, cha_targets, find_declaration, load_program, resolve_dispatch

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


class HierarchyTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.services = load_program([FIXTURES / "servicefw.ir", FIXTURES / "connectbot.ir"])
        cls.loaders = load_program([FIXTURES / "loaders.ir", FIXTURES / "loaders_app.ir"])

    def test_dispatch_walks_superclasses(self) -> None:
        method = resolve_dispatch(self.services, "HostListActivity", Signature("startService", 1))

        self.assertEqual("ContextImpl.startService(Intent)", method.key)

    def test_dispatch_prefers_override(self) -> None:
        method = resolve_dispatch(self.services, "TrackRecordingService", Signature("onStartCommand", 0))

        self.assertEqual("TrackRecordingService.onStartCommand()", method.key)

    def test_dispatch_misses_unknown_signature(self) -> None:
        self.assertIsNone(resolve_dispatch(self.services, "Service", Signature("onCreate", 1)))
        self.assertIsNone(resolve_dispatch(self.services, "ActivityThreadHandler", Signature("sendMessage", 1)))

    def test_declaration_found_on_interface(self) -> None:
        method = find_declaration(self.loaders, "LoaderCallbacks", Signature("onLoadFinished", 1))

        self.assertIsNotNone(method)
        self.assertTrue(method.is_abstract)
        self.assertEqual("LoaderCallbacks", method.owner)

    def test_cha_targets_cover_subtype_cone(self) -> None:
        targets = cha_targets(self.services, "Service", Signature("onCreate", 0))

        self.assertEqual(
            ["Service.onCreate()", "TrackRecordingService.onCreate()"],
            [method.key for method in targets],
        )

    def test_cha_targets_through_interface(self) -> None:
        targets = cha_targets(self.loaders, "LoaderCallbacks", Signature("onCreateLoader", 1))

        self.assertEqual(["BrowserFragment.onCreateLoader(int)"], [method.key for method in targets])

    def test_subtypes_include_builtin_ancestors(self) -> None:
        self.assertIn("ServiceArgsHandler", self.services.subtypes("Handler"))
        self.assertEqual(
            ["HostListActivity", "Activity", "ContextImpl", "Object"],
            self.services.supertypes("HostListActivity"),
        )


if __name__ == "__main__":  # pragma: no cover - test hook
    unittest.main()
