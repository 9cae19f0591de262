"""Tests the cli.py module."""

from csv import reader
from json import loads
from pathlib import Path
from tempfile import TemporaryDirectory
from unittest import TestCase

from photoemit.cli import Outcome, float_list, get_args, main
from photoemit.exceptions import AccuracyError, ConditioningError
from photoemit.exceptions import DomainError, SolverError
from photoemit.lock import Locked


CONFIG = """fermi_energy_ev = 4.5
work_function_ev = 5.5
field_v_per_nm = {field}
photon_energy_ev = 1.55
"""


def read_csv(path: Path) -> list[list[str]]:
    """Read a CSV file into rows."""

    with path.open(encoding="utf-8", newline="") as file:
        return list(reader(file))


class TestGetArgs(TestCase):
    """Tests the get_args() function."""

    def test_solve(self):
        """Tests the arguments of a configured subcommand."""
        args = get_args(["solve", "-c", "metal.toml", "-p", "2", "-r"])
        self.assertEqual(args.subcommand, "solve")
        self.assertEqual(args.config, Path("metal.toml"))
        self.assertEqual(args.periods, 2)
        self.assertTrue(args.refine)

    def test_lists(self):
        """Tests comma-separated lists."""
        args = get_args(["scan", "-c", "m.toml", "-w", "5.2,5.5,"])
        self.assertEqual(args.omegas, [5.2, 5.5])
        self.assertEqual(float_list("0.12, 0.24"), [0.12, 0.24])

    def test_invalid(self):
        """Tests that argparse rejects unknown flags and figures."""
        for argv in (["solve", "-c", "m.toml", "--bogus"], ["reproduce",
                     "fig9"], ["solve"], ["scan", "-c", "m.toml"]):
            with self.subTest(argv=argv):
                with self.assertRaises(SystemExit) as context:
                    get_args(argv)

                self.assertEqual(context.exception.code, 2)


class TestOutcome(TestCase):
    """Tests the Outcome context manager."""

    def test_mapping(self):
        """Tests the exit codes of the error classes."""
        for error, code in ((KeyboardInterrupt(), 1), (DomainError("x"), 2),
                            (AccuracyError("j", 1.0, 0.1), 3),
                            (SolverError("x", window=3), 4),
                            (ConditioningError("x"), 4),
                            (Locked("solver"), 4), (RuntimeError("x"), 5)):
            with self.subTest(error=error):
                with Outcome() as outcome:
                    raise error

                self.assertEqual(outcome.exit_code, code)

    def test_message(self):
        """Tests that the message carries the diagnostics."""
        with Outcome() as outcome:
            raise SolverError("singular", window=7, residual=0.5)

        self.assertEqual(outcome.message,
                         "singular (window 7, residual 5.000e-01)")

    def test_success(self):
        """Tests that a clean run keeps exit code 0."""
        with Outcome() as outcome:
            pass

        self.assertEqual(outcome.exit_code, 0)
        self.assertIsNone(outcome.message)


class TestMain(TestCase):
    """Tests the main() function."""

    def setUp(self):
        self.directory = TemporaryDirectory()
        self.path = Path(self.directory.name)

    def tearDown(self):
        self.directory.cleanup()

    def _config(self, field: float) -> str:
        path = self.path / f"metal_{field}.toml"
        path.write_text(CONFIG.format(field=field), encoding="utf-8")
        return str(path)

    def test_missing_config(self):
        """Tests that a missing configuration exits with 2."""
        self.assertEqual(main(["solve", "-c", str(self.path / "none.toml"),
                               "-o", str(self.path)]), 2)
        self.assertFalse((self.path / "manifest.json").exists())

    def test_invalid_config(self):
        """Tests that invalid physics exits with 2."""
        self.assertEqual(main(["solve", "-c", self._config(-1),
                               "-o", str(self.path)]), 2)

    def test_invalid_numbers(self):
        """Tests that bad counts exit with 2."""
        config = self._config(15)
        self.assertEqual(main(["solve", "-c", config, "-p", "0",
                               "-o", str(self.path)]), 2)
        self.assertEqual(main(["floquet", "-c", config, "-t", "0",
                               "-o", str(self.path)]), 2)

    def test_floquet(self):
        """Tests the channel table and the manifest."""
        out = self.path / "floquet"
        self.assertEqual(main(["floquet", "-c", self._config(15),
                               "-o", str(out)]), 0)
        rows = read_csv(out / "floquet.csv")
        self.assertEqual(rows[0][0], "m")
        manifest = loads((out / "manifest.json").read_text(encoding="utf-8"))
        diagnostics = manifest["diagnostics"]
        self.assertEqual(len(rows), 2 * diagnostics["order"] + 2)
        self.assertEqual(manifest["subcommand"], "floquet")
        self.assertEqual(manifest["outputs"], ["floquet.csv"])
        self.assertIsNone(manifest["config"]["floquet"]["channels"])
        self.assertLess(diagnostics["flux_defect"], 1e-8)
        self.assertGreaterEqual(diagnostics["digits"], 24)

    def test_floquet_channels(self):
        """Tests that -n fixes the truncation."""
        out = self.path / "channels"
        self.assertEqual(main(["floquet", "-c", self._config(15), "-n", "4",
                               "-o", str(out)]), 0)
        self.assertEqual(len(read_csv(out / "floquet.csv")), 10)
        manifest = loads((out / "manifest.json").read_text(encoding="utf-8"))
        self.assertEqual(manifest["config"]["floquet"]["channels"], 4)

    def test_repeated_run(self):
        """Tests that identical runs differ in their timings only."""
        config, manifests = self._config(15), []

        for name in ("first", "second"):
            out = self.path / name
            self.assertEqual(main(["floquet", "-c", config, "-n", "4",
                                   "-o", str(out)]), 0)
            manifests.append(loads(
                (out / "manifest.json").read_text(encoding="utf-8")))

        for manifest in manifests:
            self.assertNotIn("wall_time_s", manifest["diagnostics"])
            self.assertGreater(
                manifest.pop("nondeterministic")["wall_time_s"], 0)

        self.assertEqual(manifests[0], manifests[1])

    def test_solve_without_field(self):
        """Tests that no current flows without field."""
        out = self.path / "solve"
        self.assertEqual(main(["solve", "-c", self._config(0), "-p", "1",
                               "-o", str(out)]), 0)
        rows = read_csv(out / "current.csv")
        self.assertEqual(rows[0], ["t", "t_over_tau", "j_over_k"])
        self.assertEqual(len(rows), 1026)
        self.assertLess(max(abs(float(row[2])) for row in rows[1:]), 1e-5)
        manifest = loads((out / "manifest.json").read_text(encoding="utf-8"))
        self.assertEqual(manifest["outputs"], ["trace.csv", "current.csv"])
        self.assertIsNone(manifest["diagnostics"]["keldysh"])
        self.assertLess(manifest["diagnostics"]["residual"], 1e-7)
