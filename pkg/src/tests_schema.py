import unittest

import polars as pl
from pydantic import ValidationError

from src.schema.report import EngineConfig, IntegrationResult, RunConfig, VolumeReport
from src.schema.util import flat_frame, pl_df_from_pydantic_list, pl_schema_from_pydantic


class TestIntegrationResult(unittest.TestCase):

    def test_scaled(self):
        r = IntegrationResult(estimate=2.0, error_estimate=0.1, engine="adaptive").scaled(-3.0)
        self.assertEqual(r.estimate, -6.0)
        self.assertAlmostEqual(r.error_estimate, 0.3)

    def test_combine(self):
        parts = [
            IntegrationResult(estimate=1.0, error_estimate=0.01, evaluations=10, engine="qmc", seed=3),
            IntegrationResult(estimate=2.0, error_estimate=0.02, evaluations=5, engine="qmc", converged=False),
        ]
        total = IntegrationResult.combine(parts)
        self.assertEqual(total.estimate, 3.0)
        self.assertAlmostEqual(total.error_estimate, 0.03)
        self.assertEqual(total.evaluations, 15)
        self.assertEqual(total.seed, 3)
        self.assertFalse(total.converged)

    def test_negative_error_is_rejected(self):
        with self.assertRaises(ValidationError):
            IntegrationResult(estimate=1.0, error_estimate=-1.0, engine="adaptive")


class TestRunConfig(unittest.TestCase):

    def test_json_round_trip(self):
        cfg = RunConfig(command="volumes", scenarios=["bures:[(2,3)]:real"], engine_config=EngineConfig(seed=5))
        self.assertEqual(RunConfig.model_validate_json(cfg.model_dump_json()), cfg)

    def test_rejects_unknown_command(self):
        with self.assertRaises(ValidationError):
            RunConfig(command="plot")


class TestFrames(unittest.TestCase):

    def test_schema_follows_annotations(self):
        schema = pl_schema_from_pydantic(VolumeReport)
        self.assertEqual(schema["total"], pl.Float64)
        self.assertEqual(schema["method"], pl.Utf8)
        self.assertEqual(schema["seed"], pl.Int64)
        self.assertIsInstance(schema["engine_config"], pl.Struct)

    def test_flat_frame(self):
        reports = [
            VolumeReport(scenario="hs:[(2,3)]:real", metric="hs", method="factorized", total=1.0, total_err=0.0),
            VolumeReport(scenario="hs:[(2,3)]:complex", metric="hs", method="factorized", total=2.0, total_err=0.0),
        ]
        df = flat_frame(pl_df_from_pydantic_list(reports))
        self.assertIn("engine_config.seed", df.columns)
        self.assertNotIn("engine_config", df.columns)
        self.assertNotIn("separable", df.columns)
        self.assertEqual(df["total"].to_list(), [1.0, 2.0])

    def test_empty_list(self):
        with self.assertRaises(ValueError):
            pl_df_from_pydantic_list([])


if __name__ == "__main__":
    unittest.main()
