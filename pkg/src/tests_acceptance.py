import unittest

from src.acceptance import bound_check, checks, relative_check, run_check
from src.schema.report import EngineConfig


class TestCheckHelpers(unittest.TestCase):

    def test_relative_check(self):
        self.assertTrue(relative_check("a", 1.0000001, 1.0, 1e-6).passed)
        self.assertFalse(relative_check("a", 1.1, 1.0, 1e-6).passed)
        self.assertEqual(relative_check("a", 0.5, 0.0, 1.0).deviation, 0.5)

    def test_bound_check(self):
        result = bound_check("b", 0.2, 0.15)
        self.assertFalse(result.passed)
        self.assertEqual(result.expected, 0.0)


class TestSuite(unittest.TestCase):

    def test_levels(self):
        quick = {c.name for c in checks("quick")}
        full = {c.name for c in checks("full")}
        self.assertEqual(len(quick), len(checks("quick")))
        self.assertTrue(quick <= full)
        self.assertIn("dyson:bures-single-pinned", quick)
        self.assertIn("dual-route:bures:[(2,3)]:real", full - quick)

    def test_cheap_quick_checks_pass(self):
        wanted = {
            "quadrature:linear",
            "sepfun:bures-real-half",
            "dyson:hs-single",
            "dyson:hs-two",
            "dyson:bures-single-pinned",
            "dyson:bures-two-vs-single",
            "density:bures:[(2,3)]:real",
        }
        config = EngineConfig()
        selected = [c for c in checks("quick") if c.name in wanted]
        self.assertEqual(len(selected), len(wanted))
        for check in selected:
            with self.subTest(check=check.name):
                self.assertTrue(run_check(check, config).passed)


if __name__ == "__main__":
    unittest.main()
