import math
import unittest

import numpy as np

from src.bloore import BloorePoint, build_rho, mu_of, random_interior_points
from src.errors import NearSingularError, UnsupportedScenarioError
from src.metric import (
    bures_metric,
    bures_single_complex,
    diagonal_factor,
    hs_metric,
    mu_chart_jacobian,
    radial_weight,
    sphere_area,
    tangent_basis,
    volume_density_closed,
    volume_density_numeric,
)
from src.schema.scenario import Scenario, catalog, parse_scenario


class TestTangentBasis(unittest.TestCase):

    def test_matches_finite_differences(self):
        h = 1e-6
        for label in ("hs:[(2,3)]:complex", "hs:[(1,4),(2,3)]:quat", "hs:[(1,2),(2,3)]:real"):
            s = parse_scenario(label)
            (p,) = random_interior_points(s, 1, seed=2)
            v = p.as_vector()
            for axis, basis in enumerate(tangent_basis(p, s)):
                with self.subTest(scenario=label, axis=axis):
                    step = np.zeros_like(v)
                    step[axis] = h
                    plus = build_rho(BloorePoint.from_vector(v + step, s), s)
                    minus = build_rho(BloorePoint.from_vector(v - step, s), s)
                    np.testing.assert_allclose(basis, (plus - minus) / (2 * h), atol=1e-9)

    def test_rejects_boundary(self):
        s = parse_scenario("bures:[(2,3)]:real")
        with self.assertRaises(ValueError):
            tangent_basis(BloorePoint(0.25, 0.25, 0.25, ((1.0,),)), s)


class TestMetricTensor(unittest.TestCase):

    def test_symmetric(self):
        for s in catalog():
            with self.subTest(scenario=str(s)):
                for p in random_interior_points(s, 5, seed=8):
                    g = (bures_metric if s.metric == "bures" else hs_metric)(p, s).g
                    np.testing.assert_allclose(g, g.T, atol=1e-12)
                    self.assertEqual(g.shape, (s.dimension, s.dimension))

    def test_bures_equals_hs_at_maximally_mixed_state(self):
        for s in catalog("bures"):
            with self.subTest(scenario=str(s)):
                p = BloorePoint(0.25, 0.25, 0.25, tuple((0.0,) * s.components for _ in s.entries))
                np.testing.assert_allclose(bures_metric(p, s).g, hs_metric(p, s).g, atol=1e-12)

    def test_near_singular_is_rejected(self):
        s = parse_scenario("bures:[(2,3)]:real")
        with self.assertRaises(NearSingularError):
            bures_metric(BloorePoint(0.25, 0.25, 0.25, ((1.0 - 1e-10,),)), s)

    def test_hs_density_is_constant_in_offdiagonals(self):
        s = parse_scenario("hs:[(2,3)]:complex")
        a = volume_density_numeric(BloorePoint(0.1, 0.2, 0.3, ((0.1, 0.2),)), s)
        b = volume_density_numeric(BloorePoint(0.1, 0.2, 0.3, ((-0.6, 0.5),)), s)
        self.assertAlmostEqual(a / b, 1.0, places=10)
        self.assertAlmostEqual(a, 2.0 * (2.0 * 0.2 * 0.3), places=10)


class TestClosedForms(unittest.TestCase):

    def test_numeric_matches_closed_form(self):
        for s in catalog():
            with self.subTest(scenario=str(s)):
                for p in random_interior_points(s, 25, seed=31):
                    closed = volume_density_closed(p, s)
                    numeric = volume_density_numeric(p, s)
                    self.assertLess(abs(numeric - closed) / closed, 1e-6)

    def test_complex_element_factorizes(self):
        rho11, rho22, mu = 0.2, 0.3, 0.8
        values = [
            bures_single_complex(rho11, rho22, x, y, mu) * math.sqrt(1.0 - x * x - y * y)
            for x, y in ((0.0, 0.0), (0.3, -0.4), (-0.7, 0.1))
        ]
        np.testing.assert_allclose(values, values[0], rtol=1e-12)

    def test_native_chart_carries_the_mu_jacobian(self):
        s = parse_scenario("bures:[(2,3)]:real")
        p = BloorePoint(0.2, 0.3, 0.1, ((0.4,),))
        native = volume_density_closed(p, s, chart="native")
        cartesian = volume_density_closed(p, s)
        jac = float(mu_chart_jacobian(p.rho11, p.rho22, mu_of(p).mu))
        self.assertAlmostEqual(native / jac, cartesian, places=12)

    def test_factor_split(self):
        s = parse_scenario("bures:[(1,4),(2,3)]:real")
        p = BloorePoint(0.2, 0.3, 0.1, ((0.4,), (-0.5,)))
        expected = diagonal_factor(s, 0.2, 0.3, 0.1) * radial_weight("bures", 0.4) * radial_weight("bures", 0.5)
        self.assertAlmostEqual(volume_density_closed(p, s), float(expected), places=12)

    def test_unsupported_scenario(self):
        s = Scenario(metric="bures", entries=[(1, 2), (2, 3)], algebra="complex")
        with self.assertRaises(UnsupportedScenarioError):
            volume_density_closed(BloorePoint(0.2, 0.3, 0.1, ((0.1, 0.1), (0.2, 0.2))), s)

    def test_sphere_area(self):
        self.assertAlmostEqual(sphere_area(1), 2.0)
        self.assertAlmostEqual(sphere_area(2), 2.0 * math.pi)
        self.assertAlmostEqual(sphere_area(3), 4.0 * math.pi)
        self.assertAlmostEqual(sphere_area(4), 2.0 * math.pi**2)


class TestSymmetries(unittest.TestCase):

    @staticmethod
    def swapped(p: BloorePoint) -> BloorePoint:
        # basis relabelling 1↔2, 3↔4: (ρ11, ρ44) ↔ (ρ22, ρ33) and x14 ↔ x23
        q14, q23 = p.coords
        return BloorePoint(p.rho22, p.rho11, p.rho44, (q23, q14))

    def test_two_entry_swap(self):
        for label in ("bures:[(1,4),(2,3)]:real", "bures:[(1,4),(2,3)]:complex", "bures:[(1,4),(2,3)]:quat"):
            s = parse_scenario(label)
            for p in random_interior_points(s, 10, seed=17):
                q = self.swapped(p)
                with self.subTest(scenario=label, point=p):
                    self.assertAlmostEqual(q.rho44, p.rho33, places=12)
                    closed = volume_density_closed(p, s)
                    self.assertLess(abs(volume_density_closed(q, s) - closed) / closed, 1e-8)
                    numeric = volume_density_numeric(p, s)
                    self.assertLess(abs(volume_density_numeric(q, s) - numeric) / numeric, 1e-8)

    def test_quaternionic_zeroed_component_is_immaterial(self):
        for label in ("bures:[(2,3)]:quat-1", "hs:[(2,3)]:quat-1"):
            s = parse_scenario(label)
            for p in random_interior_points(s, 5, seed=23):
                reference = volume_density_numeric(p, s)
                for name in ("x", "y", "u", "v"):
                    with self.subTest(scenario=label, dropped=name):
                        value = volume_density_numeric(p, s, dropped=name)
                        self.assertLess(abs(value - reference) / reference, 1e-9)
        with self.assertRaises(ValueError):
            volume_density_numeric(BloorePoint(0.2, 0.3, 0.1, ((0.1, 0.2, 0.3, 0.1),)), parse_scenario("bures:[^(2,3)]"), dropped="x")
        with self.assertRaises(ValueError):
            volume_density_numeric(BloorePoint(0.2, 0.3, 0.1, ((0.1, 0.2, 0.3),)), parse_scenario("bures:[(2,3)]:quat-1"), dropped="w")

    def test_log_density_has_rank_one_structure(self):
        # log density = diagonal part + off-diagonal part, so the double-centred grid vanishes
        diagonals = ((0.1, 0.2, 0.3), (0.25, 0.25, 0.25), (0.4, 0.1, 0.2), (0.15, 0.35, 0.3), (0.3, 0.3, 0.1))
        offdiagonals = {
            "bures:[(2,3)]:real": [((0.0,),), ((0.3,),), ((-0.5,),), ((0.7,),), ((0.9,),)],
            "bures:[(2,3)]:complex": [((0.0, 0.0),), ((0.3, -0.2),), ((-0.5, 0.4),), ((0.1, 0.7),), ((0.6, 0.6),)],
            "bures:[(1,4),(2,3)]:real": [((0.0,), (0.0,)), ((0.3,), (-0.6,)), ((-0.5,), (0.2,)), ((0.8,), (0.4,)), ((0.1,), (0.9,))],
        }
        for label, coords in offdiagonals.items():
            s = parse_scenario(label)
            grid = np.array([
                [math.log(volume_density_numeric(BloorePoint(*d, c), s)) for c in coords]
                for d in diagonals
            ])
            centred = grid - grid.mean(axis=0) - grid.mean(axis=1, keepdims=True) + grid.mean()
            with self.subTest(scenario=label):
                self.assertLess(np.abs(centred).max(), 1e-6)


if __name__ == "__main__":
    unittest.main()
