import json
import math
import tempfile
import unittest
from pathlib import Path

import polars as pl

from src.cli import (
    EXIT_IO,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_UNSUPPORTED,
    build_parser,
    main,
    run_config_from_args,
)
from src.schema.report import tool_version


class CliTestCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def run_cli(self, *argv: str, name: str = "out.txt") -> tuple[int, str]:
        path = Path(self.tmp.name) / name
        code = main([*argv, "--out", str(path), "--log-level", "ERROR"])
        return code, path.read_text(encoding="utf-8") if path.exists() else ""


class TestRunConfig(CliTestCase):

    def test_defaults(self):
        cfg = run_config_from_args(build_parser().parse_args(["figures"]))
        self.assertEqual(cfg.format, "csv")
        self.assertEqual(cfg.grid, 201)
        self.assertEqual(cfg.metric, "bures")
        cfg = run_config_from_args(build_parser().parse_args(["volumes", "--scenario", "hs:[(2,3)]", "--seed", "7"]))
        self.assertEqual(cfg.format, "table")
        self.assertEqual(cfg.scenarios, ["hs:[(2,3)]"])
        self.assertEqual(cfg.engine_config.seed, 7)


class TestCommands(CliTestCase):

    def test_list_json(self):
        code, text = self.run_cli("list", "--format", "json")
        self.assertEqual(code, EXIT_OK)
        payload = json.loads(text)
        self.assertEqual(len(payload["records"]), 16)
        self.assertEqual(payload["summary"]["scenarios"], 16)
        self.assertEqual(payload["run_config"]["command"], "list")

    def test_list_filters_metric(self):
        code, text = self.run_cli("list", "--metric", "bures", "--format", "csv")
        self.assertEqual(code, EXIT_OK)
        df = pl.read_csv(text.encode())
        self.assertEqual(df.height, 8)
        self.assertEqual(set(df["metric"]), {"bures"})

    def test_reference(self):
        code, text = self.run_cli("reference", "--format", "csv")
        self.assertEqual(code, EXIT_OK)
        df = pl.read_csv(text.encode())
        self.assertEqual(df.columns[:2], ["scenario", "quantity"])
        self.assertEqual(set(df["version"]), {tool_version()})
        self.assertEqual(set(df["engine_config.seed"]), {20240601})
        row = df.filter((pl.col("scenario") == "bures:[(2,3)]:real") & (pl.col("quantity") == "total"))
        self.assertAlmostEqual(row["value"][0], math.pi**2 / 12.0, places=8)

    def test_figures_csv(self):
        code, text = self.run_cli("figures", name="curves.csv")
        self.assertEqual(code, EXIT_OK)
        df = pl.read_csv(text.encode())
        self.assertEqual(df.height, 201)
        self.assertIn("dev_rc", df.columns)
        self.assertAlmostEqual(df["dev_rc"].max(), 0.0678166578822439, delta=1e-9)

    def test_sepfun_hits_pi_at_one(self):
        code, text = self.run_cli("sepfun", "--scenario", "bures:[(2,3)]:real", "--grid", "5", "--format", "json")
        self.assertEqual(code, EXIT_OK)
        rows = {row["mu"]: row for row in json.loads(text)["records"]}
        self.assertAlmostEqual(rows[1.0]["s_closed"], math.pi)
        self.assertAlmostEqual(rows[1.0]["s_numeric"] / math.pi, 1.0, delta=1e-6)

    def test_sepfun_hs_quaternionic(self):
        code, text = self.run_cli("sepfun", "--scenario", "hs:[(2,3)]:quat", "--grid", "9", "--format", "csv")
        self.assertEqual(code, EXIT_OK)
        df = pl.read_csv(text.encode())
        row = df.filter(pl.col("mu") == 0.5)
        self.assertAlmostEqual(row["s_closed"][0], math.pi**2 * 0.5**4 / 2.0)
        self.assertLessEqual(df["deviation"].max(), 1e-6 * math.pi**2 / 2.0)

    def test_volumes(self):
        code, text = self.run_cli("volumes", "--scenario", "hs:[(2,3)]:complex", "--format", "json")
        self.assertEqual(code, EXIT_OK)
        (record,) = json.loads(text)["records"]
        self.assertAlmostEqual(record["probability"], 1.0 / 3.0, delta=1e-5)

    def test_json_is_deterministic(self):
        _, a = self.run_cli("figures", "--family", "two", "--format", "json", name="a.json")
        _, b = self.run_cli("figures", "--family", "two", "--format", "json", name="b.json")
        self.assertEqual(a, b)


class TestExitCodes(CliTestCase):

    def test_unsupported_scenario(self):
        code, _ = self.run_cli("sepfun", "--scenario", "bures:[(1,2),(2,3)]:real")
        self.assertEqual(code, EXIT_UNSUPPORTED)
        code, _ = self.run_cli("volumes", "--scenario", "hs:[~(1,2),~(2,3)]")
        self.assertEqual(code, EXIT_UNSUPPORTED)

    def test_malformed_scenario(self):
        code, _ = self.run_cli("sepfun", "--scenario", "bures:[(1,3)]:real")
        self.assertEqual(code, EXIT_UNSUPPORTED)

    def test_unconverged_run_exits_four_after_writing(self):
        argv = ("volumes", "--scenario", "bures:[(2,3)]:real", "--rel-tol", "1e-8", "--max-evals", "10", "--format", "json")
        code, text = self.run_cli(*argv)
        self.assertEqual(code, EXIT_NOT_CONVERGED)
        (record,) = json.loads(text)["records"]
        self.assertFalse(record["converged"])
        code, _ = self.run_cli(*argv, "--allow-unconverged", name="allowed.json")
        self.assertEqual(code, EXIT_OK)

    def test_unwritable_output(self):
        blocker = Path(self.tmp.name) / "file"
        blocker.write_text("", encoding="utf-8")
        code = main(["list", "--out", str(blocker / "out.txt"), "--log-level", "ERROR"])
        self.assertEqual(code, EXIT_IO)


if __name__ == "__main__":
    unittest.main()
