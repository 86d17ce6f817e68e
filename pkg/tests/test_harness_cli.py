import shutil
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from click.testing import CliRunner

from core import EvaluationError
from harness_cli import EXIT_IO, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, cli, main

TINY_RUN = ["--runs", "2", "--budget-multiplier", "20", "--seed", "1"]


class HarnessCliTestCase(unittest.TestCase):
    """Test cases for the command-line harness"""

    def setUp(self):
        self.tmpdir = Path(tempfile.mkdtemp())
        self.out = str(self.tmpdir / "results")

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def test_run_output(self):
        """Test the progress and tally lines"""
        runner = CliRunner()
        result = runner.invoke(
            cli,
            ["run", "--functions", "1,5", "--dims", "10", "--out", self.out]
            + TINY_RUN,
        )
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("🚀 4 cells x 2 runs", result.output)
        self.assertIn("[4/4] F5_D10_clu_de", result.output)
        self.assertIn("📊 D=10: Clu-DE w/t/l = 0/2/0", result.output)
        self.assertTrue((Path(self.out) / "summary.csv").exists())

    def test_config_file(self):
        """Test a plan read from a config file with a flag override"""
        config = self.tmpdir / "plan.cfg"
        config.write_text(
            "# smoke test\nfunctions = 1\ndims = 10\nruns = 3\n"
            "budget_multiplier = 20\nalgos = de\n"
        )
        code = main(
            ["run", "--config", str(config), "--runs", "2", "--out", self.out]
        )
        self.assertEqual(code, EXIT_OK)
        summary = (Path(self.out) / "summary.csv").read_text().splitlines()
        self.assertEqual(len(summary), 2)
        self.assertTrue(summary[1].startswith("F1,10,de,2,"))
        self.assertFalse((Path(self.out) / "verdicts.csv").exists())

    def test_compare(self):
        """Test that compare rewrites files from cell results"""
        args = ["run", "--functions", "1", "--dims", "10", "--out", self.out]
        self.assertEqual(main(args + TINY_RUN), EXIT_OK)
        self.assertEqual(main(["compare", "--out", self.out]), EXIT_OK)
        self.assertEqual(
            main(["compare", "--out", self.out, "--method", "normal"]), EXIT_OK
        )

    def test_list_functions(self):
        """Test the catalog listing"""
        result = CliRunner().invoke(cli, ["list-functions"])
        self.assertEqual(result.exit_code, 0)
        lines = result.output.splitlines()
        self.assertEqual(len(lines), 11)
        self.assertIn("rastrigin", lines[5])
        self.assertTrue(lines[10].startswith("F10"))

    def test_gen_transforms_then_run(self):
        """Test writing transform files and running against them"""
        transforms = str(self.tmpdir / "transforms")
        code = main(
            ["gen-transforms", "--dims", "10", "--functions", "3", "--out", transforms]
        )
        self.assertEqual(code, EXIT_OK)
        self.assertTrue((Path(transforms) / "F3_D10.txt").exists())
        args = ["run", "--functions", "3", "--dims", "10", "--out", self.out]
        self.assertEqual(main(args + TINY_RUN + ["--transforms", transforms]), EXIT_OK)

    def test_usage_errors(self):
        """Test exit code 1 for bad plans and bad flags"""
        cases = [
            ["run", "--functions", "5", "--dims", "20"],
            ["run", "--functions", "5"],
            ["run", "--dims", "10"],
            ["run", "--functions", "F42", "--dims", "10"],
            ["run", "--functions", "5", "--dims", "10", "--runs", "many"],
            ["run", "--functions", "5", "--dims", "10", "--boundary", "wrap"],
            ["compare", "--out", str(self.tmpdir)],
            ["compare", "--out", str(self.tmpdir), "--alpha", "1.5"],
            ["gen-transforms", "--dims", "12", "--out", str(self.tmpdir)],
            ["no-such-command"],
        ]
        for argv in cases:
            with self.subTest(argv=argv):
                self.assertEqual(main(argv), EXIT_USAGE)

    def test_unknown_config_key(self):
        """Test exit code 1 for an unknown config key"""
        config = self.tmpdir / "plan.cfg"
        config.write_text("functions = 1\ndims = 10\npopsize = 20\n")
        self.assertEqual(main(["run", "--config", str(config)]), EXIT_USAGE)

    def test_missing_transform_directory(self):
        """Test exit code 3 when transform files cannot be read"""
        missing = str(self.tmpdir / "absent")
        argv = ["run", "--functions", "1", "--dims", "10", "--out", self.out]
        self.assertEqual(main(argv + TINY_RUN + ["--transforms", missing]), EXIT_IO)

    def test_output_path_is_a_file(self):
        """Test exit code 3 when --out names an existing file"""
        blocker = self.tmpdir / "afile"
        blocker.write_text("not a directory\n")
        argv = ["run", "--functions", "1", "--dims", "10"] + TINY_RUN
        self.assertEqual(main(argv + ["--out", str(blocker)]), EXIT_IO)
        self.assertEqual(main(argv + ["--out", str(blocker / "nested")]), EXIT_IO)
        gen = ["gen-transforms", "--dims", "10", "--functions", "1"]
        self.assertEqual(main(gen + ["--out", str(blocker)]), EXIT_IO)

    def test_evaluation_error_exit_code(self):
        """Test exit code 2 when an objective fails during a run"""
        failure = EvaluationError("F1 returned nan")
        with mock.patch("harness_cli.run_experiment", side_effect=failure):
            argv = ["run", "--functions", "1", "--dims", "10", "--out", self.out]
            self.assertEqual(main(argv + TINY_RUN), EXIT_RUNTIME)


if __name__ == "__main__":
    unittest.main()
