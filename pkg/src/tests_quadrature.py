import math
import unittest

import numpy as np

from src.quadrature import (
    IntegrandSpec,
    SubstitutionKind,
    apply_substitution,
    integrate,
    integrate_adaptive,
    integrate_qmc,
    with_substitutions,
)
from src.schema.report import EngineConfig


def _unit_ball(dim: int) -> IntegrandSpec:
    return IntegrandSpec(
        lower=(-1.0,) * dim,
        upper=(1.0,) * dim,
        density=lambda x: np.ones(x.shape[0]),
        indicator=lambda x: np.sum(x * x, axis=1) <= 1.0,
    )


class TestIntegrandSpec(unittest.TestCase):

    def test_rejects_bad_boxes(self):
        with self.assertRaises(ValueError):
            IntegrandSpec(lower=(0.0,), upper=(0.0,), density=lambda x: x[:, 0])
        with self.assertRaises(ValueError):
            IntegrandSpec(lower=(0.0, 0.0), upper=(1.0,), density=lambda x: x[:, 0])
        with self.assertRaises(ValueError):
            IntegrandSpec(lower=(0.0,), upper=(math.inf,), density=lambda x: x[:, 0])

    def test_density_only_evaluated_inside(self):
        seen = []

        def density(x):
            seen.append(x.shape[0])
            return 1.0 / x[:, 0]

        spec = IntegrandSpec(lower=(-1.0,), upper=(1.0,), density=density, indicator=lambda x: x[:, 0] > 0.0)
        values, n_bad = spec.evaluate(np.array([[-0.5], [0.0], [0.5]]))
        np.testing.assert_allclose(values, [0.0, 0.0, 2.0])
        self.assertEqual(n_bad, 0)
        self.assertEqual(seen, [1])

    def test_non_finite_values_are_masked(self):
        spec = IntegrandSpec(lower=(0.0,), upper=(1.0,), density=lambda x: 1.0 / x[:, 0])
        values, n_bad = spec.evaluate(np.array([[0.0], [0.5]]))
        np.testing.assert_allclose(values, [0.0, 2.0])
        self.assertEqual(n_bad, 1)

    def test_substitution_bookkeeping(self):
        spec = IntegrandSpec(lower=(0.0, 2.0), upper=(1.0, 3.0), density=lambda x: x[:, 0] + x[:, 1])
        sub = apply_substitution(spec, 1, "arcsine-both")
        self.assertEqual(sub.substitutions, (SubstitutionKind.IDENTITY, SubstitutionKind.ARCSINE_BOTH))
        self.assertEqual(sub.upper[1], math.pi / 2.0)
        with self.assertRaises(ValueError):
            apply_substitution(sub, 1, "arcsine")
        with self.assertRaises(ValueError):
            apply_substitution(spec, 2)


class TestAdaptive(unittest.TestCase):

    def test_linear(self):
        spec = IntegrandSpec(lower=(0.0,), upper=(1.0,), density=lambda x: 2.0 * x[:, 0])
        result = integrate_adaptive(spec, rel_tol=1e-8)
        self.assertAlmostEqual(result.estimate, 1.0, delta=1e-10)
        self.assertTrue(result.converged)
        self.assertEqual(result.engine, "adaptive")

    def test_polynomials_up_to_degree_seven_are_exact(self):
        spec = IntegrandSpec(
            lower=(0.0, -1.0, 0.0),
            upper=(1.0, 1.0, 2.0),
            density=lambda x: x[:, 0] ** 7 * (x[:, 1] ** 6 + 1.0) * x[:, 2] ** 3,
        )
        expected = (1.0 / 8.0) * (2.0 / 7.0 + 2.0) * 4.0
        result = integrate_adaptive(spec, rel_tol=1e-8)
        self.assertAlmostEqual(result.estimate / expected, 1.0, delta=1e-12)

    def test_disk_with_inverse_square_root(self):
        # polar (r, θ); the substitution absorbs 1/sqrt(1 − r²)
        spec = IntegrandSpec(
            lower=(0.0, 0.0),
            upper=(1.0, 2.0 * math.pi),
            density=lambda x: x[:, 0] / np.sqrt(1.0 - x[:, 0] ** 2),
        )
        spec = with_substitutions(spec, {0: "arcsine"})
        result = integrate_adaptive(spec, rel_tol=1e-7)
        self.assertAlmostEqual(result.estimate / (2.0 * math.pi), 1.0, delta=1e-6)

    def test_both_ends_singular(self):
        # ∫₀¹ dx / sqrt(x(1 − x)) = π
        spec = IntegrandSpec(lower=(0.0,), upper=(1.0,), density=lambda x: 1.0 / np.sqrt(x[:, 0] * (1.0 - x[:, 0])))
        result = integrate_adaptive(with_substitutions(spec, {0: "arcsine-both"}), rel_tol=1e-8)
        self.assertAlmostEqual(result.estimate, math.pi, delta=1e-8)

    def test_indicator_region(self):
        result = integrate_adaptive(_unit_ball(2), rel_tol=1e-3, max_evals=5_000_000)
        self.assertTrue(result.converged)
        self.assertAlmostEqual(result.estimate / math.pi, 1.0, delta=2e-3)

    def test_thin_region_missed_by_every_rule_node(self):
        # on the first cells no Gauss node lands in x ≤ 0.05; the vertex votes still find the cut
        spec = IntegrandSpec(
            lower=(0.0,), upper=(1.0,), density=lambda x: np.ones(x.shape[0]), indicator=lambda x: x[:, 0] <= 0.05
        )
        result = integrate_adaptive(spec)
        self.assertTrue(result.converged)
        self.assertAlmostEqual(result.estimate / 0.05, 1.0, delta=1e-4)

        corner = IntegrandSpec(
            lower=(0.0, 0.0),
            upper=(1.0, 1.0),
            density=lambda x: np.ones(x.shape[0]),
            indicator=lambda x: x[:, 0] + x[:, 1] <= 0.1,
        )
        result = integrate_adaptive(corner, rel_tol=1e-3)
        self.assertTrue(result.converged)
        self.assertAlmostEqual(result.estimate / 0.005, 1.0, delta=1e-2)

    def test_cut_cells_are_refined_first(self):
        # the steep smooth part near 0 would draw every split under a plain largest-error order
        spans = []

        def indicator(x):
            if x[:, 0].min() <= 0.3 <= x[:, 0].max():
                spans.append(float(x[:, 0].max() - x[:, 0].min()))
            return x[:, 0] <= 0.3

        spec = IntegrandSpec(lower=(0.0,), upper=(1.0,), density=lambda x: 1.0 / (x[:, 0] + 0.01), indicator=indicator)
        integrate_adaptive(spec, max_evals=400)
        self.assertLess(min(spans), 1e-3)

    def test_substitutions_leave_the_integral_unchanged(self):
        rng = np.random.default_rng(41)
        for case in range(20):
            c = rng.uniform(-2.0, 2.0)
            a = rng.uniform(-1.0, 1.0)
            b = a + rng.uniform(0.5, 2.0)
            spec = IntegrandSpec(lower=(a,), upper=(b,), density=lambda x, c=c: np.exp(c * x[:, 0]) * (1.0 + x[:, 0] ** 2))
            raw = integrate_adaptive(spec, rel_tol=1e-8)
            for kind in ("arcsine", "arcsine-both"):
                with self.subTest(case=case, substitution=kind):
                    sub = integrate_adaptive(apply_substitution(spec, 0, kind), rel_tol=1e-8)
                    allowed = max(3.0 * (raw.error_estimate + sub.error_estimate), 1e-7 * abs(raw.estimate))
                    self.assertLessEqual(abs(sub.estimate - raw.estimate), allowed)

    def test_budget_exhaustion_is_reported(self):
        result = integrate_adaptive(_unit_ball(3), rel_tol=1e-8, max_evals=5_000)
        self.assertFalse(result.converged)
        self.assertGreater(result.error_estimate, 0.0)

    def test_deterministic(self):
        a = integrate_adaptive(_unit_ball(2), rel_tol=1e-3)
        b = integrate_adaptive(_unit_ball(2), rel_tol=1e-3)
        self.assertEqual(a, b)

    def test_rejects_tiny_tolerance(self):
        with self.assertRaises(ValueError):
            integrate_adaptive(_unit_ball(1), rel_tol=1e-9)


class TestQmc(unittest.TestCase):

    def test_four_ball(self):
        result = integrate_qmc(_unit_ball(4), n_points=2**20, seed=3, replicates=8)
        self.assertAlmostEqual(result.estimate / (math.pi**2 / 2.0), 1.0, delta=2e-3)
        self.assertEqual(result.replicates, 8)
        self.assertEqual(result.seed, 3)

    def test_seeded_runs_repeat(self):
        a = integrate_qmc(_unit_ball(3), n_points=2**12, seed=11, replicates=4)
        b = integrate_qmc(_unit_ball(3), n_points=2**12, seed=11, replicates=4)
        self.assertEqual(a.estimate, b.estimate)
        self.assertEqual(a.error_estimate, b.error_estimate)

    def test_points_rounded_to_power_of_two(self):
        result = integrate_qmc(_unit_ball(2), n_points=3000, seed=1, replicates=2)
        self.assertEqual(result.evaluations, 4096 * 2)

    def test_replicate_spread_shrinks_with_more_points(self):
        spec = IntegrandSpec(lower=(0.0,) * 3, upper=(1.0,) * 3, density=lambda x: np.exp(np.sum(x, axis=1)))
        coarse = integrate_qmc(spec, n_points=2**12, seed=9, replicates=8)
        fine = integrate_qmc(spec, n_points=2**16, seed=9, replicates=8)
        self.assertLess(fine.error_estimate, coarse.error_estimate)
        self.assertAlmostEqual(fine.estimate / (math.e - 1.0) ** 3, 1.0, delta=1e-4)

    def test_nested_regions_give_ordered_volumes(self):
        estimates = []
        for radius in (0.3, 0.5, 0.8, 1.0):
            spec = IntegrandSpec(
                lower=(-1.0,) * 3,
                upper=(1.0,) * 3,
                density=lambda x: np.ones(x.shape[0]),
                indicator=lambda x, radius=radius: np.sum(x * x, axis=1) <= radius * radius,
            )
            estimates.append(integrate_qmc(spec, n_points=2**12, seed=13, replicates=4).estimate)
        self.assertEqual(estimates, sorted(estimates))
        self.assertLess(estimates[0], estimates[-1])

    def test_rejections(self):
        with self.assertRaises(ValueError):
            integrate_qmc(_unit_ball(2), n_points=512)
        with self.assertRaises(ValueError):
            integrate_qmc(_unit_ball(2), n_points=2**12, replicates=1)


class TestRouter(unittest.TestCase):

    def test_dimension_decides_engine(self):
        config = EngineConfig(rel_tol=1e-3, qmc_n=2**12, replicates=4, seed=5)
        self.assertEqual(integrate(_unit_ball(2), config).engine, "adaptive")
        self.assertEqual(integrate(_unit_ball(6), config).engine, "qmc")
        with self.assertRaises(ValueError):
            integrate(_unit_ball(2), config, engine="simpson")


if __name__ == "__main__":
    unittest.main()
