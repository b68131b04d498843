import tempfile
import textwrap
import unittest
from pathlib import Path

from minifw import CallKind, Const, Local, Origin, StmtKind, format_program, load_program, parse_program, stmt_kind
from minifw.model import FieldLoad, IfGoto, Invoke, StaticLoad, StaticStore
from pcs_core import IRParseError, PcsError

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def _parse(text: str):
    return parse_program(textwrap.dedent(text).strip() + "\n", "test.ir")


class ParserTests(unittest.TestCase):
    def test_service_fixture_parses(self) -> None:
        program = load_program([FIXTURES / "servicefw.ir"])

        apis = [method.key for method in program.api_methods()]
        self.assertEqual(
            [
                "ContextImpl.startService(Intent)",
                "ContextImpl.bindService(Intent,ServiceConnection)",
                "ContextImpl.unbindService(ServiceConnection)",
            ],
            apis,
        )
        self.assertTrue(program.is_framework("ContextImpl"))
        self.assertTrue(program.is_subtype("ActivityThreadHandler", "Handler"))

    def test_statements_are_numbered_and_labelled(self) -> None:
        program = load_program([FIXTURES / "servicefw.ir"])
        method = program.method("ContextImpl.startService(Intent)")

        self.assertEqual(list(range(len(method.body))), [stmt.sid for stmt in method.body])
        self.assertIsInstance(method.body[0], FieldLoad)
        self.assertIsInstance(method.body[1], StaticLoad)
        branch = method.body[2]
        self.assertIsInstance(branch, IfGoto)
        self.assertEqual(Const("null", None), branch.right)
        self.assertEqual(method.label_targets()["CREATE"], 8)
        self.assertIsInstance(method.body[-2], StaticStore)
        self.assertEqual(("DONE",), method.body[-2].labels)

    def test_call_kinds(self) -> None:
        program = _parse(
            """
            framework public class Util {
                public static int twice(int x) {
                    int y;
                    y = x + x;
                    return y;
                }
                public void run(Util other) {
                    int r;
                    r = static Util.twice(3);
                    virtual other.run(this);
                    special this.run(other);
                    return;
                }
            }
            """
        )
        body = program.method("Util.run(Util)").body

        self.assertEqual(
            [StmtKind.STATIC_CALL, StmtKind.VIRTUAL_CALL, StmtKind.SPECIAL_CALL, StmtKind.RETURN],
            [stmt_kind(stmt) for stmt in body],
        )
        first = body[0]
        self.assertIsInstance(first, Invoke)
        self.assertIs(CallKind.STATIC, first.call_kind)
        self.assertEqual("r", first.target)
        self.assertEqual((Const.of(3),), first.args)
        self.assertEqual((Local("this"),), body[1].args)

    def test_declarations_default_to_app_origin(self) -> None:
        program = _parse(
            """
            public class Screen {
                public void show() {
                    return;
                }
            }
            """
        )

        self.assertIs(Origin.APP, program.lookup("Screen").origin)
        self.assertTrue(program.is_app("Screen"))

    def test_syntax_error_reports_location(self) -> None:
        with self.assertRaises(IRParseError) as caught:
            parse_program("framework class A {\n    public void f() {\n        x = ;\n    }\n}\n", "bad.ir")

        first = caught.exception.diagnostics[0]
        self.assertEqual("bad.ir", first.source)
        self.assertEqual(3, first.line)
        self.assertIn("syntax error", first.message)

    def test_semantic_errors_are_collected(self) -> None:
        with self.assertRaises(IRParseError) as caught:
            _parse(
                """
                framework class A extends Missing {
                    public void f() {
                        y = 1;
                        goto NOWHERE;
                    }
                }
                framework class A {
                }
                """
            )

        messages = [item.message for item in caught.exception.diagnostics]
        self.assertIn("duplicate class A", messages)
        self.assertIn("unresolved superclass Missing", messages)
        self.assertIn("unresolved local y in A.f", messages)
        self.assertIn("unresolved label NOWHERE in A.f", messages)

    def test_api_flag_requires_framework_class(self) -> None:
        with self.assertRaises(IRParseError) as caught:
            _parse(
                """
                app class Screen {
                    public api void open() {
                        return;
                    }
                }
                """
            )

        self.assertIn("api flag on app method Screen.open", caught.exception.message)

    def test_inheritance_cycle_is_rejected(self) -> None:
        with self.assertRaises(IRParseError) as caught:
            _parse(
                """
                interface A extends B {
                }
                interface B extends A {
                }
                """
            )

        self.assertTrue(any("inheritance cycle" in item.message for item in caught.exception.diagnostics))

    def test_printed_program_reparses_to_same_program(self) -> None:
        for names in (("servicefw.ir", "connectbot.ir"), ("loaders.ir", "loaders_app.ir"), ("large.ir",)):
            with self.subTest(fixtures=names):
                program = load_program([FIXTURES / name for name in names])
                text = format_program(program)

                reparsed = parse_program(text, "printed.ir")

                self.assertEqual(program, reparsed)
                self.assertEqual(text, format_program(reparsed))

    def test_missing_file_is_reported_by_path(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            missing = Path(tmpdir, "absent.ir")
            with self.assertRaises(PcsError) as caught:
                load_program([missing])

        self.assertIn(str(missing), caught.exception.message)

    def test_undecodable_file_is_reported_by_path(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            broken = Path(tmpdir, "latin.ir")
            broken.write_bytes(b"framework class Caf\xe9 {\n}\n")
            with self.assertRaises(PcsError) as caught:
                load_program([broken])

        self.assertIn(str(broken), caught.exception.message)
        self.assertNotIsInstance(caught.exception, IRParseError)


if __name__ == "__main__":  # pragma: no cover - test hook
    unittest.main()
