import math
import os
import unittest

import numpy as np

from src.errors import UnsupportedScenarioError
from src.schema.report import EngineConfig
from src.schema.scenario import parse_scenario
from src.sepfun import (
    BURES_NEAR_MISS_THRESHOLD,
    conjectured_s_real,
    dyson_report,
    printed_quat1_form,
    mu_grid,
    normalize,
    pin_convention,
    sep_function_closed,
    sep_function_numeric,
    separability_function,
)

PI = math.pi

FACTORIZABLE = (
    "hs:[(2,3)]:real",
    "hs:[(2,3)]:complex",
    "hs:[(2,3)]:quat",
    "hs:[(2,3)]:quat-1",
    "hs:[(1,4),(2,3)]:real",
    "hs:[(1,4),(2,3)]:complex",
    "hs:[(1,4),(2,3)]:quat",
    "bures:[(2,3)]:real",
    "bures:[(2,3)]:complex",
    "bures:[(2,3)]:quat",
    "bures:[(2,3)]:quat-1",
    "bures:[(1,4),(2,3)]:real",
    "bures:[(1,4),(2,3)]:complex",
    "bures:[(1,4),(2,3)]:quat",
)


def S(label: str, mu: float) -> float:
    return sep_function_closed(parse_scenario(label), mu)


class TestClosedForms(unittest.TestCase):

    def test_hilbert_schmidt_powers(self):
        self.assertAlmostEqual(S("hs:[(2,3)]:real", 0.3), 0.6)
        self.assertAlmostEqual(S("hs:[(2,3)]:complex", 0.3), PI * 0.09)
        self.assertAlmostEqual(S("hs:[(2,3)]:quat", 0.5), PI**2 * 0.5**4 / 2.0)
        self.assertAlmostEqual(S("hs:[(2,3)]:quat-1", 0.5), 4.0 * PI / 3.0 * 0.125)
        self.assertAlmostEqual(S("hs:[(1,4),(2,3)]:real", 0.5), 2.0)
        self.assertAlmostEqual(S("hs:[(1,4),(2,3)]:complex", 0.5), PI**2 / 4.0)
        self.assertAlmostEqual(S("hs:[(1,4),(2,3)]:quat", 2.0), PI**4 / 4.0 / 16.0)

    def test_bures_single_entry(self):
        self.assertAlmostEqual(S("bures:[(2,3)]:real", 1.0), PI)
        self.assertAlmostEqual(S("bures:[(2,3)]:real", 0.5), PI / 3.0)
        self.assertAlmostEqual(S("bures:[(2,3)]:complex", 0.6), 2.0 * PI * 0.2)
        self.assertAlmostEqual(S("bures:[(2,3)]:quat", 1.0), 4.0 * PI**2 / 3.0)
        self.assertAlmostEqual(S("bures:[(2,3)]:quat-1", 1.0), PI**2)

    def test_bures_two_entry(self):
        self.assertAlmostEqual(S("bures:[(1,4),(2,3)]:real", 1.0), PI**2)
        self.assertAlmostEqual(S("bures:[(1,4),(2,3)]:complex", 1.0), 16.0 * PI**2)
        self.assertAlmostEqual(S("bures:[(1,4),(2,3)]:quat", 1.0), 16.0 * PI**4 / 9.0)
        self.assertEqual(separability_function(parse_scenario("bures:[(1,4),(2,3)]:complex")).convention, 4.0)

    def test_single_entry_is_constant_above_one(self):
        for label in FACTORIZABLE:
            if "(1,4)" in label:
                continue
            with self.subTest(scenario=label):
                values = np.asarray(sep_function_closed(parse_scenario(label), np.array([1.0, 1.3, 2.0, 7.5])))
                np.testing.assert_allclose(values, values[0], rtol=1e-15)

    def test_two_entry_is_symmetric(self):
        grid = np.array([0.1, 0.37, 0.5, 0.9, 0.999])
        for label in FACTORIZABLE:
            if "(1,4)" not in label:
                continue
            with self.subTest(scenario=label):
                f = separability_function(parse_scenario(label))
                np.testing.assert_allclose(f(grid), f(1.0 / grid), rtol=1e-12)

    def test_continuous_at_one(self):
        for label in FACTORIZABLE:
            with self.subTest(scenario=label):
                f = separability_function(parse_scenario(label))
                self.assertAlmostEqual(f(1.0 - 1e-12) / f(1.0), 1.0, places=5)
                self.assertAlmostEqual(f(1.0 + 1e-12) / f(1.0), 1.0, places=5)

    def test_normalize(self):
        f = normalize(separability_function(parse_scenario("bures:[(2,3)]:complex")))
        self.assertTrue(f.normalized)
        self.assertAlmostEqual(f(1.0), 1.0, places=15)
        self.assertAlmostEqual(f(0.6), 0.2)

    def test_chain_has_no_separability_function(self):
        with self.assertRaises(UnsupportedScenarioError):
            separability_function(parse_scenario("bures:[(1,2),(2,3)]:real"))

    def test_printed_zeroed_form(self):
        self.assertLess(printed_quat1_form(0.5), 0.0)
        self.assertAlmostEqual(printed_quat1_form(1.5), 1.859, places=3)

    def test_conjectured_real(self):
        self.assertEqual(conjectured_s_real(1.0), 1.0)
        self.assertAlmostEqual(conjectured_s_real(0.5), 0.6875)


class TestNumeric(unittest.TestCase):

    config = EngineConfig(rel_tol=1e-8)

    def test_arcsine_at_one_half(self):
        result = sep_function_numeric(parse_scenario("bures:[(2,3)]:real"), 0.5, "adaptive", self.config)
        self.assertAlmostEqual(result.estimate / (PI / 3.0), 1.0, delta=1e-9)

    def test_closed_matches_numeric(self):
        config = EngineConfig()
        for label in FACTORIZABLE:
            s = parse_scenario(label)
            for mu in (0.05, 0.5, 0.95, 1.0, 1.6):
                with self.subTest(scenario=label, mu=mu):
                    closed = sep_function_closed(s, mu)
                    result = sep_function_numeric(s, mu, "adaptive", config)
                    allowed = max(1e-6 * closed, 3.0 * result.error_estimate)
                    self.assertLessEqual(abs(result.estimate - closed), allowed)

    def test_convention_is_pinned_at_one(self):
        self.assertAlmostEqual(pin_convention(parse_scenario("bures:[(1,4),(2,3)]:complex")), 4.0, places=6)
        self.assertAlmostEqual(pin_convention(parse_scenario("bures:[(1,4),(2,3)]:real")), 1.0, places=6)

    def test_rejects_nonpositive_mu(self):
        with self.assertRaises(ValueError):
            sep_function_numeric(parse_scenario("hs:[(2,3)]:real"), 0.0)

    @unittest.skipUnless(os.getenv("SEPFUN_FULL_TESTS"), "set SEPFUN_FULL_TESTS=1 for QMC checks")
    def test_qmc_four_ball(self):
        s = parse_scenario("bures:[(2,3)]:quat")
        result = sep_function_numeric(s, 0.7, "qmc", EngineConfig(seed=9))
        expected = (2.0 * PI**2 / 3.0) * (2.0 - (0.49 + 2.0) * math.sqrt(0.51))
        self.assertAlmostEqual(result.estimate / expected, 1.0, delta=1e-3)


class TestDyson(unittest.TestCase):

    def test_grid(self):
        grid = mu_grid()
        self.assertEqual(len(grid), 201)
        self.assertEqual(grid[0], 0.005)
        self.assertIn(1.0, grid)
        self.assertIn(1.0, mu_grid(25, 2.0))
        self.assertIn(1.0, mu_grid(10, 1.5))
        with self.assertRaises(ValueError):
            mu_grid(1)

    def test_hilbert_schmidt_is_exact(self):
        for family in ("single", "two"):
            with self.subTest(family=family):
                report = dyson_report("hs", family)
                self.assertLessEqual(report.max_deviation, 1e-12)
                self.assertTrue(report.exact)
                self.assertEqual(len(report.rows), 201)

    def test_bures_single_pinned(self):
        report = dyson_report("bures", "single")
        self.assertAlmostEqual(report.max_dev_rc, 0.0678166578822439, delta=1e-9)
        self.assertAlmostEqual(report.max_dev_rq, 0.1416637904633, delta=1e-9)
        self.assertAlmostEqual(report.max_dev_cq, 0.0740435736274658, delta=1e-9)
        self.assertGreater(min(report.max_dev_rc, report.max_dev_rq, report.max_dev_cq), 0.0)
        self.assertLessEqual(report.max_deviation, BURES_NEAR_MISS_THRESHOLD)
        self.assertFalse(report.exact)

    def test_bures_dominance_order(self):
        for row in dyson_report("bures", "single").rows:
            if row.mu < 1.0:
                self.assertGreaterEqual(row.s_quat_norm, row.s_complex_norm_pow2)
                self.assertGreaterEqual(row.s_complex_norm_pow2, row.s_real_norm_pow4)

    def test_bures_two_entry_matches_single_below_one(self):
        single = dyson_report("bures", "single")
        two = dyson_report("bures", "two")
        self.assertAlmostEqual(two.max_dev_rc, 0.0678947300705509, delta=1e-9)
        self.assertAlmostEqual(two.max_dev_cq, 0.0740726848399282, delta=1e-9)
        for a, b in zip(single.rows, two.rows):
            self.assertLessEqual(b.sym_dev, 1e-12)
            if a.mu < 1.0:
                self.assertAlmostEqual(a.s_real_norm_pow4, b.s_real_norm_pow4, delta=1e-12)
                self.assertAlmostEqual(a.s_complex_norm_pow2, b.s_complex_norm_pow2, delta=1e-12)
                self.assertAlmostEqual(a.s_quat_norm, b.s_quat_norm, delta=1e-12)
        self.assertIsNone(single.rows[0].sym_dev)


if __name__ == "__main__":
    unittest.main()
