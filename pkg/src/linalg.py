from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
import math

import numpy as np

# Dense self-adjoint matrices are plain complex128 arrays; spectra are ascending float64 arrays.
HermitianMatrix = np.ndarray
Spectrum = np.ndarray

DEFAULT_PSD_TOL = 1e-10
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class Quaternion:
    """w + i·x + j·y + k·z"""

    w: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __mul__(self, other: Quaternion) -> Quaternion:
        return quat_mul(self, other)

    def conj(self) -> Quaternion:
        return quat_conj(self)

    def __abs__(self) -> float:
        return quat_abs(self)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z], dtype=float)


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    return Quaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def quat_conj(q: Quaternion) -> Quaternion:
    return Quaternion(q.w, -q.x, -q.y, -q.z)


def quat_abs(q: Quaternion) -> float:
    return math.sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z)


def quat_to_block(q: Quaternion | np.ndarray) -> np.ndarray:
    """
    Complex 2×2 image of a quaternion: q = a + b·j with a = w + i·x, b = y + i·z
    maps to [[a, b], [-conj(b), conj(a)]].
    """
    w, x, y, z = q.as_array() if isinstance(q, Quaternion) else np.asarray(q, dtype=float)
    a = complex(w, x)
    b = complex(y, z)
    return np.array([[a, b], [-b.conjugate(), a.conjugate()]], dtype=complex)


def hermitian(upper: np.ndarray) -> HermitianMatrix:
    """Mirror the upper triangle, keeping a real diagonal, so that M = M† holds exactly."""
    m = np.asarray(upper, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape={m.shape}")
    out = np.triu(m, 1)
    out = out + out.conj().T
    out[np.diag_indices_from(out)] = m.diagonal().real
    return out


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.allclose(m, m.conj().T, atol=tol, rtol=0.0))


def _check_quaternionic(h: np.ndarray, tol: float) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.ndim != 3 or h.shape[0] != h.shape[1] or h.shape[2] != 4:
        raise ValueError(f"expected an (n, n, 4) array of quaternion components, got shape={h.shape}")
    adjoint = np.transpose(h, (1, 0, 2)) * np.array([1.0, -1.0, -1.0, -1.0])
    if not np.allclose(h, adjoint, atol=tol, rtol=0.0):
        raise ValueError("quaternionic matrix is not self-adjoint under quaternionic conjugation")
    return h


def embed_quaternionic(h: np.ndarray, tol: float = HERMITIAN_TOL) -> HermitianMatrix:
    """
    Symplectic embedding of an n×n quaternionic hermitian matrix into a 2n×2n complex one.

    `h` holds the quaternion components (w, x, y, z) along its last axis. Every eigenvalue of
    `h` appears twice in the spectrum of the result.
    """
    h = _check_quaternionic(h, tol)
    n = h.shape[0]
    a = h[..., 0] + 1j * h[..., 1]
    b = h[..., 2] + 1j * h[..., 3]
    out = np.empty((n, 2, n, 2), dtype=complex)
    out[:, 0, :, 0] = a
    out[:, 0, :, 1] = b
    out[:, 1, :, 0] = -b.conj()
    out[:, 1, :, 1] = a.conj()
    return out.reshape(2 * n, 2 * n)


def eigenvalues_hermitian(m: HermitianMatrix) -> Spectrum:
    return np.linalg.eigvalsh(np.asarray(m))


def min_eigenvalues(stack: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of every matrix in an (N, n, n) stack."""
    return np.linalg.eigvalsh(stack)[..., 0]


def is_psd(m: HermitianMatrix, tol: float = DEFAULT_PSD_TOL) -> bool:
    if tol < 0:
        raise ValueError(f"tol must be non-negative, got {tol}")
    return bool(eigenvalues_hermitian(m)[0] >= -tol)


def principal_minors_psd(m: HermitianMatrix, tol: float = DEFAULT_PSD_TOL) -> bool:
    """Sylvester-type oracle: every principal minor is non-negative (up to tol)."""
    m = np.asarray(m)
    n = m.shape[0]
    for size in range(1, n + 1):
        for idx in combinations(range(n), size):
            minor = np.linalg.det(m[np.ix_(idx, idx)]).real
            if minor < -tol:
                return False
    return True


def partial_transpose(rho: HermitianMatrix) -> HermitianMatrix:
    """Transpose on the second qubit of a 2⊗2 system; entries (1,4) and (2,3) trade places."""
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"partial_transpose expects a 4×4 matrix, got shape={rho.shape}")
    return rho.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def partial_transpose_embedded(m: HermitianMatrix) -> HermitianMatrix:
    """
    Partial transpose of a quaternionic 4×4 matrix acting on its 8×8 embedding.

    The 2×2 blocks are moved, not transposed, so the result equals embed(PT(H)).
    """
    m = np.asarray(m)
    if m.shape != (8, 8):
        raise ValueError(f"partial_transpose_embedded expects an 8×8 matrix, got shape={m.shape}")
    return m.reshape(2, 2, 2, 2, 2, 2).transpose(0, 4, 2, 3, 1, 5).reshape(8, 8)


__all__ = [
    "HermitianMatrix",
    "Spectrum",
    "Quaternion",
    "quat_mul",
    "quat_conj",
    "quat_abs",
    "quat_to_block",
    "hermitian",
    "is_hermitian",
    "embed_quaternionic",
    "eigenvalues_hermitian",
    "min_eigenvalues",
    "is_psd",
    "principal_minors_psd",
    "partial_transpose",
    "partial_transpose_embedded",
    "DEFAULT_PSD_TOL",
]
