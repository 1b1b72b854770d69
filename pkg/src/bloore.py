from __future__ import annotations

from dataclasses import dataclass, field, replace
import math
from typing import Literal, Sequence

import numpy as np

from src.linalg import (
    DEFAULT_PSD_TOL,
    HermitianMatrix,
    embed_quaternionic,
    is_psd,
    partial_transpose,
    partial_transpose_embedded,
)
from src.schema.scenario import COMPONENT_NAMES, Scenario

Branch = Literal["lower", "upper"]
Method = Literal["closed", "eigen"]


@dataclass(frozen=True)
class BloorePoint:
    """
    Diagonal entries ρ11, ρ22, ρ33 (ρ44 implied) plus the Cartesian Bloore coordinates of every
    free entry, in scenario order. An off-diagonal entry (i, j) equals
    sqrt(ρii·ρjj)·(x + i·y + j·u + k·v).
    """

    rho11: float
    rho22: float
    rho33: float
    coords: tuple[tuple[float, ...], ...] = field(default_factory=tuple)

    @property
    def rho44(self) -> float:
        return 1.0 - self.rho11 - self.rho22 - self.rho33

    @property
    def diagonal(self) -> tuple[float, float, float, float]:
        return (self.rho11, self.rho22, self.rho33, self.rho44)

    def with_coords(self, coords: Sequence[Sequence[float]]) -> BloorePoint:
        return replace(self, coords=tuple(tuple(float(c) for c in entry) for entry in coords))

    def zeroed_offdiagonal(self) -> BloorePoint:
        return self.with_coords([[0.0] * len(entry) for entry in self.coords])

    def as_vector(self) -> np.ndarray:
        flat = [c for entry in self.coords for c in entry]
        return np.array([self.rho11, self.rho22, self.rho33, *flat], dtype=float)

    @classmethod
    def from_vector(cls, vector: Sequence[float], s: Scenario) -> BloorePoint:
        v = np.asarray(vector, dtype=float)
        if v.shape != (s.dimension,):
            raise ValueError(f"expected {s.dimension} coordinates for {s}, got {v.shape}")
        k = s.components
        coords = tuple(tuple(v[3 + e * k : 3 + (e + 1) * k]) for e in range(len(s.entries)))
        return cls(float(v[0]), float(v[1]), float(v[2]), coords)

    @classmethod
    def from_polar(
        cls,
        rho11: float,
        rho22: float,
        rho33: float,
        polar: Sequence[Sequence[float]],
    ) -> BloorePoint:
        return cls(rho11, rho22, rho33, tuple(tuple(from_polar(entry)) for entry in polar))


@dataclass(frozen=True)
class MuValue:
    mu: float

    @property
    def nu(self) -> float:
        return self.mu * self.mu


def check_point(p: BloorePoint, s: Scenario) -> None:
    diag = p.diagonal
    if min(diag) <= 0.0:
        raise ValueError(f"diagonal entries must be strictly positive, got {diag}")
    if len(p.coords) != len(s.entries) or any(len(c) != s.components for c in p.coords):
        raise ValueError(
            f"point coordinates {p.coords} do not match scenario {s} "
            f"({len(s.entries)} entries × {s.components} components)"
        )


def component_slots(s: Scenario, dropped: str | None = None) -> list[int]:
    """
    Quaternion slots (0..3 for x, y, u, v) holding the stored coordinates of an entry. A zeroed
    scenario drops `v` unless another component is named.
    """
    if dropped is None:
        return list(range(s.components))
    if not s.zeroed:
        raise ValueError(f"{s} has no zeroed component")
    if dropped not in COMPONENT_NAMES:
        raise ValueError(f"unknown quaternion component {dropped!r}, expected one of {COMPONENT_NAMES}")
    return [c for c, name in enumerate(COMPONENT_NAMES) if name != dropped]


def bloore_components(p: BloorePoint, s: Scenario, dropped: str | None = None) -> np.ndarray:
    """(4, 4, 4) array of quaternion components (w, x, y, z) of ρ; real/complex use the first two."""
    check_point(p, s)
    slots = component_slots(s, dropped)
    diag = p.diagonal
    comp = np.zeros((4, 4, 4), dtype=float)
    for i in range(4):
        comp[i, i, 0] = diag[i]
    conj = np.array([1.0, -1.0, -1.0, -1.0])
    for (i, j), coords in zip(s.entries, p.coords):
        q = np.zeros(4)
        q[slots] = coords
        scale = math.sqrt(diag[i - 1] * diag[j - 1])
        comp[i - 1, j - 1] = scale * q
        comp[j - 1, i - 1] = scale * q * conj
    return comp


def assemble(comp: np.ndarray, s: Scenario) -> HermitianMatrix:
    """Complex matrix for a component array: 4×4 for real/complex, the 8×8 embedding for quat."""
    if s.algebra == "quat":
        return embed_quaternionic(comp)
    return comp[..., 0] + 1j * comp[..., 1]


def build_rho(p: BloorePoint, s: Scenario) -> HermitianMatrix:
    return assemble(bloore_components(p, s), s)


def mu_of(p: BloorePoint) -> MuValue:
    rho11, rho22, rho33, rho44 = p.diagonal
    return MuValue(math.sqrt(rho11 * rho44 / (rho22 * rho33)))


def mu_from_diagonal(rho11, rho22, rho33, rho44=None):
    """Vectorized μ; ρ44 defaults to 1 − ρ11 − ρ22 − ρ33."""
    if rho44 is None:
        rho44 = 1.0 - rho11 - rho22 - rho33
    return np.sqrt(rho11 * rho44 / (rho22 * rho33))


def ppt_radius(entry: tuple[int, int], mu):
    """Largest Bloore norm of `entry` that keeps the partial transpose positive."""
    mu = np.asarray(mu, dtype=float)
    if entry == (2, 3):
        return np.minimum(1.0, mu)
    if entry == (1, 4):
        return np.minimum(1.0, 1.0 / mu)
    raise ValueError(f"no closed-form PPT radius for entry {entry}")


def _norms2(p: BloorePoint) -> list[float]:
    return [sum(c * c for c in entry) for entry in p.coords]


def positivity_indicator(
    p: BloorePoint,
    s: Scenario,
    method: Method = "closed",
    tol: float = DEFAULT_PSD_TOL,
) -> bool:
    check_point(p, s)
    if method == "eigen":
        return is_psd(build_rho(p, s), tol)
    norms2 = _norms2(p)
    if s.shape == "chain":
        return sum(norms2) <= 1.0
    return all(n2 <= 1.0 for n2 in norms2)


def partial_transpose_of(p: BloorePoint, s: Scenario) -> HermitianMatrix:
    rho = build_rho(p, s)
    if s.algebra == "quat":
        return partial_transpose_embedded(rho)
    return partial_transpose(rho)


def ppt_indicator(
    p: BloorePoint,
    s: Scenario,
    method: Method = "closed",
    tol: float = DEFAULT_PSD_TOL,
) -> bool:
    """Peres-Horodecki test combined with positivity of ρ itself."""
    check_point(p, s)
    if method == "eigen" or not s.is_factorizable:
        return is_psd(build_rho(p, s), tol) and is_psd(partial_transpose_of(p, s), tol)
    mu = mu_of(p).mu
    for entry, n2 in zip(s.entries, _norms2(p)):
        if n2 > float(ppt_radius(entry, mu)) ** 2:
            return False
    return True


def to_polar(c: Sequence[float]) -> np.ndarray:
    """
    Hyperspherical form (r, θ1, ..., θ_{k-1}) of a k-vector; θ1..θ_{k-2} ∈ [0, π],
    θ_{k-1} ∈ [0, 2π). For k = 1 the coordinate is returned unchanged.
    """
    c = np.asarray(c, dtype=float)
    k = c.shape[0]
    if k == 1:
        return c.copy()
    out = np.zeros(k)
    out[0] = float(np.linalg.norm(c))
    for i in range(k - 2):
        tail = float(np.linalg.norm(c[i:]))
        out[i + 1] = math.acos(max(-1.0, min(1.0, c[i] / tail))) if tail > 0 else 0.0
    out[k - 1] = math.atan2(c[k - 1], c[k - 2]) % (2.0 * math.pi)
    return out


def from_polar(polar: Sequence[float]) -> np.ndarray:
    polar = np.asarray(polar, dtype=float)
    k = polar.shape[0]
    if k == 1:
        return polar.copy()
    r, angles = polar[0], polar[1:]
    out = np.empty(k)
    running = r
    for i, theta in enumerate(angles[:-1]):
        out[i] = running * math.cos(theta)
        running *= math.sin(theta)
    out[k - 2] = running * math.cos(angles[-1])
    out[k - 1] = running * math.sin(angles[-1])
    return out


def polar_jacobian(polar: Sequence[float]) -> float:
    """r^{k-1}·Π sin^{k-1-i}(θ_i): the Cartesian volume per unit of hyperspherical volume."""
    polar = np.asarray(polar, dtype=float)
    k = polar.shape[0]
    if k == 1:
        return 1.0
    jac = polar[0] ** (k - 1)
    for i, theta in enumerate(polar[1:-1], start=1):
        jac *= math.sin(theta) ** (k - 1 - i)
    return float(jac)


def diagonal_from_mu(rho11, rho22, lam, branch: Branch = "lower"):
    """
    Complete the diagonal at fixed μ: returns (ρ33, ρ44, |∂ρ33/∂λ|) with μ = λ on the
    lower branch and μ = 1/λ on the upper one, λ ∈ (0, 1].
    """
    rest = 1.0 - rho11 - rho22
    if branch == "lower":
        p = lam * lam * rho22 + rho11
        rho33 = rho11 * rest / p
        rho44 = rest - rho33
    elif branch == "upper":
        p = lam * lam * rho11 + rho22
        rho44 = rho22 * rest / p
        rho33 = rest - rho44
    else:
        raise ValueError(f"unknown branch {branch!r}")
    jac = 2.0 * lam * rho11 * rho22 * rest / (p * p)
    return rho33, rho44, jac


def random_interior_points(
    s: Scenario,
    n: int,
    seed: int = 0,
    min_diagonal: float = 0.02,
    max_radius: float = 0.95,
) -> list[BloorePoint]:
    """Reproducible interior points: Dirichlet diagonal, off-diagonal norms below `max_radius`."""
    rng = np.random.default_rng(seed)
    k = s.components
    points: list[BloorePoint] = []
    while len(points) < n:
        diag = rng.dirichlet(np.ones(4))
        if diag.min() < min_diagonal:
            continue
        coords = []
        budget = max_radius
        for _ in s.entries:
            direction = rng.normal(size=k)
            direction /= np.linalg.norm(direction)
            radius = budget * rng.uniform(0.05, 1.0) ** (1.0 / k)
            coords.append(tuple(float(c) for c in radius * direction))
            if s.shape == "chain":
                budget = math.sqrt(max(max_radius**2 - radius**2, 0.0))
        points.append(BloorePoint(float(diag[0]), float(diag[1]), float(diag[2]), tuple(coords)))
    return points


__all__ = [
    "BloorePoint",
    "MuValue",
    "check_point",
    "component_slots",
    "bloore_components",
    "assemble",
    "build_rho",
    "mu_of",
    "mu_from_diagonal",
    "ppt_radius",
    "positivity_indicator",
    "partial_transpose_of",
    "ppt_indicator",
    "to_polar",
    "from_polar",
    "polar_jacobian",
    "diagonal_from_mu",
    "random_interior_points",
]
