import math
import os
import unittest

import numpy as np

from src.acceptance import FACTORIZABLE_SCENARIOS
from src.errors import UndefinedProbabilityError, UnsupportedScenarioError
from src.quadrature import IntegrandSpec, integrate, integrate_adaptive
from src.schema.report import EngineConfig, IntegrationResult
from src.schema.scenario import parse_scenario
from src.volumes import (
    ball_norm,
    catalan,
    direct_spec,
    marginal_jacobian,
    nested_s_times_j,
    reference_for,
    reference_table,
    separability_probability,
    separable_volume,
    simplex_map,
    total_volume,
    volume_report,
)

PI = math.pi
FULL = os.getenv("SEPFUN_FULL_TESTS")


def _result(estimate: float, error: float) -> IntegrationResult:
    return IntegrationResult(estimate=estimate, error_estimate=error, engine="adaptive")


class TestHelpers(unittest.TestCase):

    def test_catalan(self):
        self.assertAlmostEqual(catalan(), 0.915965594177219, places=12)

    def test_simplex_regions_split_at_mu_one(self):
        rng = np.random.default_rng(41)
        t = rng.uniform(0.01, 0.99, size=(1000, 3))
        for region, check in (("lower", np.less_equal), ("upper", np.greater_equal)):
            rho11, rho22, rho33, jac = simplex_map(t, region)
            rho44 = 1.0 - rho11 - rho22 - rho33
            self.assertTrue(np.all(rho44 > 0.0))
            self.assertTrue(np.all(jac > 0.0))
            mu = np.sqrt(rho11 * rho44 / (rho22 * rho33))
            self.assertTrue(np.all(check(mu, 1.0 + (1e-12 if region == "lower" else -1e-12))))
        with self.assertRaises(ValueError):
            simplex_map(t, "middle")

    def test_simplex_volume(self):
        for regions in (("full",), ("lower", "upper")):
            total = 0.0
            for region in regions:
                spec = IntegrandSpec(
                    lower=(0.0, 0.0, 0.0),
                    upper=(1.0, 1.0, 1.0),
                    density=lambda t, region=region: simplex_map(t, region)[3],
                )
                total += integrate_adaptive(spec, rel_tol=1e-8).estimate
            self.assertAlmostEqual(total, 1.0 / 6.0, places=8)

    def test_ball_norm(self):
        y = np.array([[0.0, 0.0], [0.6, 0.8], [0.3, 0.0]])
        r, rho, jac = ball_norm(y)
        np.testing.assert_allclose(rho, [0.0, 1.0, 0.3])
        np.testing.assert_allclose(r, [0.0, 1.0, math.sin(0.15 * PI)])
        self.assertAlmostEqual(jac[0], PI**2 / 4.0)
        self.assertAlmostEqual(jac[1], 0.0)


class TestProbability(unittest.TestCase):

    def test_errors_add_in_quadrature(self):
        p = separability_probability(_result(1.0, 0.003), _result(4.0, 0.016))
        self.assertEqual(p.value, 0.25)
        self.assertAlmostEqual(p.error, 0.25 * math.hypot(0.003, 0.004))

    def test_zero_total(self):
        with self.assertRaises(UndefinedProbabilityError):
            separability_probability(_result(0.0, 0.0), _result(0.0, 0.0))
        with self.assertRaises(UndefinedProbabilityError):
            separability_probability(_result(0.1, 0.0), _result(1e-6, 1e-5))


class TestReferenceTable(unittest.TestCase):

    def test_complex_values_from_catalan(self):
        s = parse_scenario("bures:[~(2,3)]")
        self.assertAlmostEqual(reference_for(s, "probability").value, 0.256384, places=6)
        self.assertAlmostEqual(reference_for(s, "separable").value, 0.124211, places=6)
        self.assertAlmostEqual(reference_for(s, "total").value, 0.484473, places=6)

    def test_hs_probabilities(self):
        self.assertAlmostEqual(reference_for(parse_scenario("hs:[(2,3)]"), "probability").value, 0.589049, places=6)
        self.assertIsNone(reference_for(parse_scenario("hs:[(2,3)]"), "total"))

    def test_probabilities_are_ratios(self):
        rows = {(r.scenario, r.quantity): r.value for r in reference_table()}
        for (label, quantity), value in rows.items():
            if quantity == "probability" and (label, "total") in rows:
                with self.subTest(scenario=label):
                    ratio = rows[(label, "separable")] / rows[(label, "total")]
                    self.assertAlmostEqual(ratio / value, 1.0, delta=1e-5)


class TestVolumes(unittest.TestCase):

    config = EngineConfig(rel_tol=1e-7)

    def test_bures_real_total(self):
        s = parse_scenario("bures:[(2,3)]:real")
        result = total_volume(s, self.config)
        self.assertAlmostEqual(result.estimate / (PI**2 / 12.0), 1.0, delta=1e-5)

    def test_hs_single_entry_probabilities(self):
        for label, expected in (
            ("hs:[(2,3)]:real", 3.0 * PI / 16.0),
            ("hs:[(2,3)]:complex", 1.0 / 3.0),
            ("hs:[(2,3)]:quat", 0.1),
        ):
            with self.subTest(scenario=label):
                s = parse_scenario(label)
                p = separability_probability(separable_volume(s, self.config), total_volume(s, self.config))
                self.assertAlmostEqual(p.value / expected, 1.0, delta=1e-5)

    def test_hs_chain_total(self):
        # 4ρ22·sqrt(ρ11ρ33) over the simplex times the unit disk: π²/120
        s = parse_scenario("hs:[(1,2),(2,3)]:real")
        result = total_volume(s, EngineConfig(rel_tol=1e-5))
        self.assertAlmostEqual(result.estimate / (PI**2 / 120.0), 1.0, delta=1e-4)

    def test_routes_agree(self):
        s = parse_scenario("hs:[(2,3)]:real")
        for compute in (total_volume, separable_volume):
            a = compute(s, self.config, route="factorized")
            b = compute(s, self.config, route="direct")
            self.assertLessEqual(abs(a.estimate - b.estimate), max(3.0 * (a.error_estimate + b.error_estimate), 1e-9))

    def test_cartesian_qmc_route(self):
        s = parse_scenario("bures:[(2,3)]:real")
        config = EngineConfig(qmc_n=2**16, replicates=8, seed=4)
        result = total_volume(s, config, route="direct", reduce_angles=False)
        self.assertEqual(result.engine, "qmc")
        self.assertAlmostEqual(result.estimate / (PI**2 / 12.0), 1.0, delta=5e-3)

    def test_marginal_jacobian_inversion_symmetry(self):
        # two-entry diagonal factors are invariant under (ρ11, ρ33) ↔ (ρ22, ρ44), so J(1/μ) = μ²·J(μ)
        for label in ("hs:[(1,4),(2,3)]:real", "bures:[(1,4),(2,3)]:complex"):
            with self.subTest(scenario=label):
                s = parse_scenario(label)
                low = marginal_jacobian(s, 0.5, self.config).estimate
                high = marginal_jacobian(s, 2.0, self.config).estimate
                self.assertAlmostEqual(high / (0.25 * low), 1.0, delta=1e-5)
        with self.assertRaises(ValueError):
            marginal_jacobian(parse_scenario("hs:[(2,3)]"), 0.0)

    def test_convention_applied_once_on_direct_route(self):
        s = parse_scenario("bures:[(1,4),(2,3)]:complex")
        config = EngineConfig(rel_tol=1e-3)
        raw = integrate(direct_spec(s, "total", "full"), config)
        reported = total_volume(s, config, route="direct")
        self.assertAlmostEqual(reported.estimate / raw.estimate, 4.0, places=12)
        self.assertAlmostEqual(raw.estimate / (PI**4 / 768.0), 1.0, delta=1e-2)
        self.assertAlmostEqual(reference_for(s, "total").value, PI**4 / 192.0, places=14)

    def test_probabilities_lie_strictly_between_zero_and_one(self):
        config = EngineConfig(rel_tol=1e-4)
        for label in FACTORIZABLE_SCENARIOS:
            with self.subTest(scenario=label):
                s = parse_scenario(label)
                p = separability_probability(separable_volume(s, config), total_volume(s, config))
                self.assertGreater(p.value, 0.0)
                self.assertLess(p.value, 1.0)

    def test_bures_probability_against_hs(self):
        config = EngineConfig(rel_tol=1e-5)

        def probability(label: str) -> float:
            s = parse_scenario(label)
            return separability_probability(separable_volume(s, config), total_volume(s, config)).value

        for algebra in ("real", "complex"):
            with self.subTest(algebra=algebra):
                self.assertLess(probability(f"bures:[(2,3)]:{algebra}"), probability(f"hs:[(2,3)]:{algebra}"))
        # the quaternionic pair is the exception: 0.10214 against 1/10
        self.assertGreater(probability("bures:[(2,3)]:quat"), probability("hs:[(2,3)]:quat"))

    def test_unsupported(self):
        chain = parse_scenario("bures:[(1,2),(2,3)]:real")
        with self.assertRaises(UnsupportedScenarioError):
            separable_volume(chain)
        with self.assertRaises(UnsupportedScenarioError):
            marginal_jacobian(chain, 0.5)

    def test_report(self):
        report = volume_report(parse_scenario("hs:[(2,3)]:real"), self.config)
        self.assertEqual(report.scenario, "hs:[(2,3)]:real")
        self.assertEqual(report.method, "factorized")
        self.assertAlmostEqual(report.reference, 3.0 * PI / 16.0)
        self.assertLess(report.rel_dev_from_reference, 1e-5)
        self.assertIsNone(report.seed)
        self.assertTrue(report.converged)


@unittest.skipUnless(FULL, "set SEPFUN_FULL_TESTS=1 for the reference volumes")
class TestReferenceVolumes(unittest.TestCase):
    """Minutes-long: every stored reference value, by the factorized route."""

    tolerance = {
        "bures:[(2,3)]:real": 1e-4,
        "bures:[(2,3)]:complex": 1e-4,
        "bures:[(2,3)]:quat": 1e-3,
        "bures:[(2,3)]:quat-1": 1e-4,
        "bures:[(1,4),(2,3)]:real": 1e-4,
        "bures:[(1,4),(2,3)]:complex": 1e-3,
        "bures:[(1,4),(2,3)]:quat": 5e-3,
    }

    def test_reference_values(self):
        config = EngineConfig()
        for label, tol in self.tolerance.items():
            s = parse_scenario(label)
            total = total_volume(s, config)
            values = {"total": total.estimate}
            if not label.endswith("quat-1"):
                separable = separable_volume(s, config)
                values["separable"] = separable.estimate
                values["probability"] = separability_probability(separable, total).value
            for quantity, value in values.items():
                with self.subTest(scenario=label, quantity=quantity):
                    expected = reference_for(s, quantity).value
                    self.assertAlmostEqual(value / expected, 1.0, delta=tol)

    def test_direct_route_agrees(self):
        config = EngineConfig(rel_tol=1e-5)
        for label in FACTORIZABLE_SCENARIOS:
            s = parse_scenario(label)
            for compute in (total_volume, separable_volume):
                with self.subTest(scenario=label, quantity=compute.__name__):
                    a = compute(s, config, route="factorized")
                    b = compute(s, config, route="direct")
                    allowed = max(3.0 * (a.error_estimate + b.error_estimate), 1e-9 * abs(a.estimate))
                    self.assertLessEqual(abs(a.estimate - b.estimate), allowed)

    def test_nested_s_times_j(self):
        s = parse_scenario("bures:[(2,3)]:real")
        result = nested_s_times_j(s, "separable", EngineConfig(rel_tol=1e-6))
        self.assertAlmostEqual(result.estimate / 0.3658435525, 1.0, delta=1e-5)

    def test_full_dimensional_quaternionic_total(self):
        s = parse_scenario("bures:[(2,3)]:quat")
        result = total_volume(s, EngineConfig(), route="direct", reduce_angles=False)
        self.assertAlmostEqual(result.estimate / (PI**4 / 768.0), 1.0, delta=5e-3)


if __name__ == "__main__":
    unittest.main()
