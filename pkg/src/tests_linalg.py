import unittest

import numpy as np

from src.linalg import (
    Quaternion,
    embed_quaternionic,
    eigenvalues_hermitian,
    hermitian,
    is_hermitian,
    is_psd,
    min_eigenvalues,
    partial_transpose,
    partial_transpose_embedded,
    principal_minors_psd,
    quat_abs,
    quat_conj,
    quat_mul,
    quat_to_block,
)


def _random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return hermitian(a + a.conj().T)


def _random_quaternionic(rng: np.random.Generator, n: int) -> np.ndarray:
    h = rng.normal(size=(n, n, 4))
    h = h + np.transpose(h, (1, 0, 2)) * np.array([1.0, -1.0, -1.0, -1.0])
    return h


class TestQuaternion(unittest.TestCase):

    def test_units_multiply_as_hamilton(self):
        i, j, k = Quaternion(0, 1), Quaternion(0, 0, 1), Quaternion(0, 0, 0, 1)
        self.assertEqual(quat_mul(i, j), k)
        self.assertEqual(quat_mul(j, i), Quaternion(0, 0, 0, -1))
        self.assertEqual(i * i, Quaternion(-1))
        self.assertEqual(quat_mul(quat_mul(i, j), k), Quaternion(-1))

    def test_norm_is_multiplicative(self):
        rng = np.random.default_rng(7)
        for _ in range(10_000):
            a = Quaternion(*rng.normal(size=4))
            b = Quaternion(*rng.normal(size=4))
            self.assertAlmostEqual(quat_abs(a * b), abs(a) * abs(b), delta=1e-12 * max(1.0, abs(a) * abs(b)))

    def test_conjugate_gives_squared_norm(self):
        q = Quaternion(0.3, -1.2, 0.5, 2.0)
        product = quat_mul(q, quat_conj(q))
        self.assertAlmostEqual(product.w, quat_abs(q) ** 2, places=12)
        self.assertAlmostEqual(abs(Quaternion(0, product.x, product.y, product.z)), 0.0, places=12)

    def test_block_image_is_a_homomorphism(self):
        rng = np.random.default_rng(11)
        a = Quaternion(*rng.normal(size=4))
        b = Quaternion(*rng.normal(size=4))
        np.testing.assert_allclose(quat_to_block(a * b), quat_to_block(a) @ quat_to_block(b), atol=1e-12)


class TestHermitian(unittest.TestCase):

    def test_mirror_keeps_real_diagonal(self):
        m = hermitian(np.array([[1.0 + 2j, 3.0 - 1j], [9.0, 4.0]]))
        self.assertTrue(is_hermitian(m))
        self.assertEqual(m[0, 0], 1.0)
        self.assertEqual(m[1, 0], 3.0 + 1j)

    def test_rejects_non_square(self):
        with self.assertRaises(ValueError):
            hermitian(np.zeros((2, 3)))

    def test_eigenvalues_sum_to_trace(self):
        rng = np.random.default_rng(3)
        for n in (2, 4, 8):
            m = _random_hermitian(rng, n)
            lam = eigenvalues_hermitian(m)
            self.assertTrue(np.all(np.diff(lam) >= 0.0))
            self.assertAlmostEqual(lam.sum(), np.trace(m).real, delta=1e-12 * n * max(1.0, np.abs(lam).max()))

    def test_eigenvalues_solve_characteristic_polynomial(self):
        rng = np.random.default_rng(5)
        m = _random_hermitian(rng, 4) / 4.0
        coeffs = np.poly(m)
        for lam in eigenvalues_hermitian(m):
            self.assertLess(abs(np.polyval(coeffs, lam)), 1e-10)

    def test_min_eigenvalues_of_stack(self):
        stack = np.stack([np.diag([1.0, 2.0]), np.diag([-3.0, 0.5])]).astype(complex)
        np.testing.assert_allclose(min_eigenvalues(stack), [1.0, -3.0])


class TestQuaternionicEmbedding(unittest.TestCase):

    def test_spectrum_is_doubled(self):
        rng = np.random.default_rng(13)
        h = _random_quaternionic(rng, 4)
        lam = eigenvalues_hermitian(embed_quaternionic(h))
        np.testing.assert_allclose(lam[0::2], lam[1::2], atol=1e-10)

    def test_rejects_non_self_adjoint(self):
        h = np.zeros((2, 2, 4))
        h[0, 1, 1] = 1.0
        with self.assertRaises(ValueError):
            embed_quaternionic(h)

    def test_rejects_wrong_shape(self):
        with self.assertRaises(ValueError):
            embed_quaternionic(np.zeros((2, 3, 4)))


class TestPositivity(unittest.TestCase):

    def test_identity_and_negative_diagonal(self):
        self.assertTrue(is_psd(np.eye(4)))
        self.assertFalse(is_psd(np.diag([1.0, -1e-3, 1.0, 1.0]), tol=1e-9))

    def test_negative_tolerance_is_rejected(self):
        with self.assertRaises(ValueError):
            is_psd(np.eye(2), tol=-1.0)

    def test_agrees_with_principal_minors(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            m = _random_hermitian(rng, 4) + 1.5 * np.eye(4)
            self.assertEqual(is_psd(m, tol=1e-9), principal_minors_psd(m, tol=1e-9))


class TestPartialTranspose(unittest.TestCase):

    def test_swaps_anti_diagonal_entries(self):
        rho = np.zeros((4, 4), dtype=complex)
        rho[0, 3] = 0.2 + 0.1j
        rho[1, 2] = 0.3 - 0.4j
        pt = partial_transpose(rho)
        self.assertEqual(pt[1, 2], 0.2 + 0.1j)
        self.assertEqual(pt[0, 3], 0.3 - 0.4j)
        np.testing.assert_allclose(partial_transpose(pt), rho)

    def test_bell_state_is_not_ppt(self):
        psi = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)
        rho = np.outer(psi, psi).astype(complex)
        self.assertTrue(is_psd(rho))
        self.assertFalse(is_psd(partial_transpose(rho)))

    def test_rejects_wrong_shape(self):
        with self.assertRaises(ValueError):
            partial_transpose(np.eye(3))
        with self.assertRaises(ValueError):
            partial_transpose_embedded(np.eye(4))

    def test_embedded_transpose_matches_quaternionic_one(self):
        rng = np.random.default_rng(19)
        h = _random_quaternionic(rng, 4)
        # partial transpose of the quaternionic matrix: swap the second-qubit index of blocks
        pt = h.reshape(2, 2, 2, 2, 4).transpose(0, 3, 2, 1, 4).reshape(4, 4, 4)
        np.testing.assert_allclose(
            partial_transpose_embedded(embed_quaternionic(h)),
            embed_quaternionic(pt),
            atol=1e-12,
        )


if __name__ == "__main__":
    unittest.main()
