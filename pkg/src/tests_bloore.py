import math
import unittest

import numpy as np

from src.bloore import (
    BloorePoint,
    build_rho,
    diagonal_from_mu,
    from_polar,
    mu_from_diagonal,
    mu_of,
    polar_jacobian,
    positivity_indicator,
    ppt_indicator,
    ppt_radius,
    random_interior_points,
    to_polar,
)
from src.linalg import eigenvalues_hermitian, is_hermitian
from src.schema.scenario import Scenario, catalog, format_scenario, in_catalog, parse_scenario


class TestScenarioGrammar(unittest.TestCase):

    def test_suffix_form(self):
        s = parse_scenario("bures:[(2,3)]:complex")
        self.assertEqual(s.metric, "bures")
        self.assertEqual(s.entries, ((2, 3),))
        self.assertEqual(s.algebra, "complex")
        self.assertEqual(s.dimension, 5)

    def test_markers_decide_algebra(self):
        self.assertEqual(parse_scenario("bures:[~(2,3)]").algebra, "complex")
        self.assertEqual(parse_scenario("hs:[^(1,4),^(2,3)]").algebra, "quat")
        self.assertEqual(parse_scenario("hs:[(2,3)]").algebra, "real")

    def test_entries_are_sorted(self):
        s = parse_scenario("hs:[(2,3),(1,4)]:real")
        self.assertEqual(s.entries, ((1, 4), (2, 3)))
        self.assertEqual(s.shape, "two")

    def test_zeroed_quaternion(self):
        s = parse_scenario("bures:[(2,3)]:quat-1")
        self.assertEqual(s.components, 3)
        self.assertEqual(s.dimension, 6)
        self.assertEqual(format_scenario(s), "bures:[(2,3)]:quat-1")

    def test_metric_fills_in(self):
        self.assertEqual(parse_scenario("[(2,3)]:quat", metric="hs").metric, "hs")

    def test_canonical_printing(self):
        self.assertEqual(format_scenario(parse_scenario("bures : [ ^(2,3) ]")), "bures:[(2,3)]:quat")

    def test_rejections(self):
        for text in (
            "bures:[(2,3)]:octonion",
            "bures:[(1,3)]:real",
            "bures:[(2,3),(2,3)]:real",
            "bures:[~(2,3)]:quat",
            "bures:[~(1,4),^(2,3)]",
            "bures:[(2,3)]:complex-1",
            "bures:[]:real",
            "nonsense",
        ):
            with self.subTest(text=text):
                with self.assertRaises(ValueError):
                    parse_scenario(text)

    def test_catalog(self):
        rows = catalog()
        self.assertEqual(len(rows), 16)
        self.assertEqual(len(set(rows)), 16)
        self.assertTrue(all(s.metric == "bures" for s in catalog("bures")))
        self.assertTrue(all(in_catalog(s) for s in rows))
        self.assertFalse(in_catalog(Scenario(metric="hs", entries=[(1, 2), (2, 3)], algebra="complex")))

    def test_coordinate_labels(self):
        s = parse_scenario("hs:[(1,4),(2,3)]:complex")
        self.assertEqual(s.coordinate_labels, ("rho11", "rho22", "rho33", "x14", "y14", "x23", "y23"))


class TestBloorePoint(unittest.TestCase):

    def test_build_rho_is_a_unit_trace_hermitian_matrix(self):
        for s in catalog("hs"):
            with self.subTest(scenario=str(s)):
                (p,) = random_interior_points(s, 1, seed=1)
                rho = build_rho(p, s)
                self.assertTrue(is_hermitian(rho))
                factor = 2.0 if s.algebra == "quat" else 1.0
                self.assertAlmostEqual(np.trace(rho).real, factor, places=12)
                self.assertGreater(eigenvalues_hermitian(rho)[0], 0.0)

    def test_offdiagonal_entry_scaling(self):
        s = parse_scenario("hs:[(2,3)]:complex")
        p = BloorePoint(0.1, 0.2, 0.3, ((0.5, -0.25),))
        rho = build_rho(p, s)
        self.assertAlmostEqual(rho[1, 2], math.sqrt(0.06) * (0.5 - 0.25j))
        self.assertAlmostEqual(rho[2, 1], math.sqrt(0.06) * (0.5 + 0.25j))

    def test_rejects_bad_points(self):
        s = parse_scenario("hs:[(2,3)]:real")
        with self.assertRaises(ValueError):
            build_rho(BloorePoint(0.5, 0.3, 0.3, ((0.0,),)), s)
        with self.assertRaises(ValueError):
            build_rho(BloorePoint(0.1, 0.2, 0.3, ((0.0, 0.0),)), s)

    def test_vector_round_trip(self):
        s = parse_scenario("bures:[(1,4),(2,3)]:quat")
        (p,) = random_interior_points(s, 1, seed=4)
        self.assertEqual(BloorePoint.from_vector(p.as_vector(), s), p)
        with self.assertRaises(ValueError):
            BloorePoint.from_vector(np.zeros(4), s)

    def test_mu(self):
        p = BloorePoint(0.25, 0.25, 0.25)
        self.assertEqual(mu_of(p).mu, 1.0)
        p = BloorePoint(0.4, 0.1, 0.2)
        self.assertAlmostEqual(mu_of(p).mu, math.sqrt(0.4 * 0.3 / 0.02))
        self.assertAlmostEqual(mu_of(p).nu, 0.4 * 0.3 / 0.02)
        self.assertAlmostEqual(float(mu_from_diagonal(0.4, 0.1, 0.2)), mu_of(p).mu)


class TestIndicators(unittest.TestCase):

    def test_ppt_radius(self):
        self.assertEqual(float(ppt_radius((2, 3), 0.5)), 0.5)
        self.assertEqual(float(ppt_radius((2, 3), 2.0)), 1.0)
        self.assertEqual(float(ppt_radius((1, 4), 2.0)), 0.5)
        self.assertEqual(float(ppt_radius((1, 4), 0.5)), 1.0)
        with self.assertRaises(ValueError):
            ppt_radius((1, 2), 1.0)

    def test_boundary_of_single_entry(self):
        s = parse_scenario("hs:[(2,3)]:real")
        self.assertFalse(positivity_indicator(BloorePoint(0.25, 0.25, 0.25, ((1.0 + 1e-6,),)), s, "eigen"))
        self.assertTrue(positivity_indicator(BloorePoint(0.25, 0.25, 0.25, ((0.999,),)), s, "eigen"))

    def test_identity_is_separable(self):
        for s in catalog("hs"):
            p = BloorePoint(0.25, 0.25, 0.25, tuple((0.0,) * s.components for _ in s.entries))
            self.assertTrue(ppt_indicator(p, s, "eigen"))

    def test_closed_and_eigen_agree(self):
        rng = np.random.default_rng(23)
        for s in catalog("bures"):
            with self.subTest(scenario=str(s)):
                for _ in range(300):
                    diag = rng.dirichlet(np.ones(4))
                    coords = tuple(tuple(rng.uniform(-1.2, 1.2, s.components)) for _ in s.entries)
                    p = BloorePoint(float(diag[0]), float(diag[1]), float(diag[2]), coords)
                    self.assertEqual(positivity_indicator(p, s, "closed"), positivity_indicator(p, s, "eigen"))
                    if s.is_factorizable:
                        self.assertEqual(ppt_indicator(p, s, "closed"), ppt_indicator(p, s, "eigen"))

    def test_ppt_region_is_min_mu(self):
        s = parse_scenario("bures:[(2,3)]:real")
        p = BloorePoint(0.1, 0.3, 0.3)
        mu = mu_of(p.with_coords([[0.0]])).mu
        self.assertLess(mu, 1.0)
        self.assertTrue(ppt_indicator(p.with_coords([[0.99 * mu]]), s))
        self.assertFalse(ppt_indicator(p.with_coords([[1.01 * mu]]), s))
        self.assertFalse(ppt_indicator(p.with_coords([[1.01 * mu]]), s, "eigen"))

    def test_single_entry_ppt_sees_only_mu(self):
        s = parse_scenario("bures:[(2,3)]:complex")
        rng = np.random.default_rng(101)
        checked = 0
        while checked < 1000:
            diag = rng.dirichlet(np.ones(4))
            p = BloorePoint(float(diag[0]), float(diag[1]), float(diag[2]), ((0.0, 0.0),))
            mu = mu_of(p).mu
            if diag.min() < 0.02 or not 0.05 < mu < 0.98:
                continue
            phase = rng.uniform(0.0, 2.0 * math.pi)
            direction = (math.cos(phase), math.sin(phase))
            inside = p.with_coords([[0.99 * mu * c for c in direction]])
            outside = p.with_coords([[1.01 * mu * c for c in direction]])
            self.assertTrue(ppt_indicator(inside, s, "eigen"), msg=str(p))
            self.assertFalse(ppt_indicator(outside, s, "eigen"), msg=str(p))
            checked += 1

    def test_ppt_constant_across_diagonals_sharing_mu(self):
        s = parse_scenario("bures:[(2,3)]:complex")
        rng = np.random.default_rng(103)
        verdicts = {((0.5, 0.2),): set(), ((0.5, 0.4),): set()}
        checked = 0
        while checked < 1000:
            rho11, rho22, _ = rng.dirichlet(np.ones(3))
            rho33, rho44, _ = diagonal_from_mu(rho11, rho22, 0.6)
            if min(rho11, rho22, rho33, rho44) < 0.01:
                continue
            p = BloorePoint(float(rho11), float(rho22), float(rho33))
            self.assertAlmostEqual(mu_of(p.with_coords([[0.0, 0.0]])).mu, 0.6, places=12)
            for coords, seen in verdicts.items():
                seen.add(ppt_indicator(p.with_coords(coords), s, "eigen"))
            checked += 1
        self.assertEqual(verdicts, {((0.5, 0.2),): {True}, ((0.5, 0.4),): {False}})

    def test_two_entry_swap_inverts_mu_and_keeps_ppt(self):
        for label in ("bures:[(1,4),(2,3)]:real", "bures:[(1,4),(2,3)]:complex", "bures:[(1,4),(2,3)]:quat"):
            s = parse_scenario(label)
            for p in random_interior_points(s, 200, seed=29):
                q14, q23 = p.coords
                q = BloorePoint(p.rho22, p.rho11, p.rho44, (q23, q14))
                mu = mu_of(p).mu
                radii = (float(ppt_radius((1, 4), mu)), float(ppt_radius((2, 3), mu)))
                norms = (math.hypot(*q14), math.hypot(*q23))
                if min(abs(n - r) for n, r in zip(norms, radii)) < 1e-6:
                    continue
                with self.subTest(scenario=label, point=p):
                    self.assertAlmostEqual(mu_of(q).mu * mu, 1.0, places=10)
                    self.assertEqual(ppt_indicator(q, s, "eigen"), ppt_indicator(p, s, "eigen"))


class TestCharts(unittest.TestCase):

    def test_polar_round_trip(self):
        rng = np.random.default_rng(29)
        for k in (1, 2, 3, 4):
            c = rng.normal(size=k)
            np.testing.assert_allclose(from_polar(to_polar(c)), c, atol=1e-12)

    def test_polar_jacobian_matches_finite_differences(self):
        polar = np.array([0.7, 0.9, 2.1, 4.0])
        h = 1e-6
        columns = []
        for i in range(4):
            step = np.zeros(4)
            step[i] = h
            columns.append((from_polar(polar + step) - from_polar(polar - step)) / (2 * h))
        det = abs(np.linalg.det(np.stack(columns, axis=1)))
        self.assertAlmostEqual(polar_jacobian(polar), det, places=8)

    def test_diagonal_from_mu_branches(self):
        for lam in (0.2, 0.7, 1.0):
            rho33, rho44, jac = diagonal_from_mu(0.3, 0.2, lam, "lower")
            self.assertAlmostEqual(float(mu_from_diagonal(0.3, 0.2, rho33, rho44)), lam)
            self.assertAlmostEqual(rho33 + rho44, 0.5)
            rho33, rho44, _ = diagonal_from_mu(0.3, 0.2, lam, "upper")
            self.assertAlmostEqual(float(mu_from_diagonal(0.3, 0.2, rho33, rho44)), 1.0 / lam)
        with self.assertRaises(ValueError):
            diagonal_from_mu(0.3, 0.2, 0.5, "middle")

    def test_diagonal_from_mu_jacobian(self):
        h = 1e-6
        lo, _, _ = diagonal_from_mu(0.3, 0.2, 0.6 - h)
        hi, _, _ = diagonal_from_mu(0.3, 0.2, 0.6 + h)
        _, _, jac = diagonal_from_mu(0.3, 0.2, 0.6)
        self.assertAlmostEqual(abs(hi - lo) / (2 * h), jac, places=7)

    def test_random_interior_points_are_reproducible(self):
        s = parse_scenario("bures:[(1,2),(2,3)]:real")
        a = random_interior_points(s, 20, seed=5)
        self.assertEqual(a, random_interior_points(s, 20, seed=5))
        for p in a:
            self.assertGreater(min(p.diagonal), 0.0)
            self.assertTrue(positivity_indicator(p, s))


if __name__ == "__main__":
    unittest.main()
