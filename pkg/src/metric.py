from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Literal

import numpy as np
from loguru import logger

from src.bloore import (
    BloorePoint,
    assemble,
    bloore_components,
    check_point,
    component_slots,
    mu_of,
    polar_jacobian,
    to_polar,
)
from src.errors import NearSingularError, UnsupportedScenarioError
from src.schema.scenario import Metric, Scenario

Chart = Literal["cartesian", "native"]

MIN_EIGENVALUE = 1e-8
_CONJ = np.array([1.0, -1.0, -1.0, -1.0])


@dataclass(frozen=True)
class MetricTensor:
    g: np.ndarray
    labels: tuple[str, ...]

    @property
    def volume_density(self) -> float:
        det = float(np.linalg.det(self.g))
        return math.sqrt(det) if det > 0.0 else 0.0


def _is_interior(p: BloorePoint, s: Scenario) -> bool:
    norms2 = [sum(c * c for c in entry) for entry in p.coords]
    if s.shape == "chain":
        return sum(norms2) < 1.0
    return all(n2 < 1.0 for n2 in norms2)


def tangent_basis(p: BloorePoint, s: Scenario, dropped: str | None = None) -> list[np.ndarray]:
    """
    ∂ρ/∂(coordinate) for ρ11, ρ22, ρ33 and every off-diagonal component, as complex matrices
    (8×8 embeddings for quaternionic scenarios). ρ44 = 1 − ρ11 − ρ22 − ρ33 is eliminated.
    """
    check_point(p, s)
    slots = component_slots(s, dropped)
    if not _is_interior(p, s):
        raise ValueError(f"tangent basis requested at a boundary point {p}")

    diag = p.diagonal
    basis: list[np.ndarray] = []

    for m in range(3):
        d = np.zeros((4, 4, 4))
        d[m, m, 0] = 1.0
        d[3, 3, 0] = -1.0
        for (i, j), coords in zip(s.entries, p.coords):
            a, b = i - 1, j - 1
            scale = math.sqrt(diag[a] * diag[b])
            rate = 0.0
            for idx in (a, b):
                if idx == m:
                    rate += 1.0 / diag[idx]
                elif idx == 3:
                    rate -= 1.0 / diag[3]
            q = np.zeros(4)
            q[slots] = coords
            d[a, b] = 0.5 * scale * rate * q
            d[b, a] = d[a, b] * _CONJ
        basis.append(assemble(d, s))

    for (i, j) in s.entries:
        a, b = i - 1, j - 1
        scale = math.sqrt(diag[a] * diag[b])
        for c in slots:
            d = np.zeros((4, 4, 4))
            d[a, b, c] = scale
            d[b, a, c] = scale * _CONJ[c]
            basis.append(assemble(d, s))
    return basis


def _embedding_scale(s: Scenario) -> float:
    # The 8×8 embedding counts every quaternionic matrix element twice.
    return 0.5 if s.algebra == "quat" else 1.0


def bures_metric(p: BloorePoint, s: Scenario, dropped: str | None = None) -> MetricTensor:
    """
    Hübner's form in the eigenbasis of ρ:
    g_ab = ½ Σ_ij Re(⟨i|∂aρ|j⟩ conj⟨i|∂bρ|j⟩) / (λi + λj).
    """
    rho = assemble(bloore_components(p, s, dropped), s)
    lam, vecs = np.linalg.eigh(rho)
    if lam[0] <= MIN_EIGENVALUE:
        logger.debug("Bures metric rejected: point={}, lambda_min={}", p, lam[0])
        raise NearSingularError(f"ρ is near-singular: smallest eigenvalue {lam[0]:.3e} at {p}")

    tangents = np.stack([vecs.conj().T @ t @ vecs for t in tangent_basis(p, s, dropped)])
    weights = 1.0 / (lam[:, None] + lam[None, :])
    g = 0.5 * np.einsum("aij,bij,ij->ab", tangents, tangents.conj(), weights).real
    g = 0.5 * (g + g.T) * _embedding_scale(s)
    return MetricTensor(g, s.coordinate_labels)


def hs_metric(p: BloorePoint, s: Scenario, dropped: str | None = None) -> MetricTensor:
    """Flat metric Tr(∂aρ·∂bρ) pulled back to Bloore coordinates."""
    tangents = np.stack(tangent_basis(p, s, dropped))
    g = np.einsum("aij,bji->ab", tangents, tangents).real
    g = 0.5 * (g + g.T) * _embedding_scale(s)
    return MetricTensor(g, s.coordinate_labels)


def metric_tensor(
    p: BloorePoint, s: Scenario, metric: Metric | None = None, dropped: str | None = None
) -> MetricTensor:
    metric = metric or s.metric
    if metric == "bures":
        return bures_metric(p, s, dropped)
    return hs_metric(p, s, dropped)


def volume_density_numeric(
    p: BloorePoint, s: Scenario, metric: Metric | None = None, dropped: str | None = None
) -> float:
    """sqrt(det g) with respect to dρ11 dρ22 dρ33 and the Cartesian off-diagonal coordinates."""
    return metric_tensor(p, s, metric, dropped).volume_density


# Closed forms. The single-entry and chain Bures expressions are stated per dρ11 dρ22 dμ
# (μ chart); the two-entry ones per dρ11 dρ22 dρ33 with polar/hyperspherical radials.


def mu_chart_jacobian(rho11, rho22, mu):
    """|∂ρ33/∂μ| at fixed ρ11, ρ22."""
    p = mu * mu * rho22 + rho11
    return 2.0 * mu * rho11 * rho22 * (1.0 - rho11 - rho22) / (p * p)


def bures_single_real(rho11, rho22, x, mu):
    rest = 1.0 - rho11 - rho22
    return (
        np.sqrt(rho11) * np.sqrt(rest) * np.sqrt(rho22)
        / (4.0 * np.sqrt(1.0 - x * x) * (rho22 * mu**2 + rho11) * np.sqrt(mu**2 * rho22**2 + (1.0 - rho11) * rho11))
    )


def bures_single_complex(rho11, rho22, x, y, mu):
    # As printed the numerator ρ11ρ22(ρ11 + ρ22 − 1) is negative on the interior.
    value = (
        rho11 * rho22 * (rho11 + rho22 - 1.0)
        / (4.0 * np.sqrt(1.0 - y * y - x * x) * (rho22 * mu**2 + rho11) * (-(rho11**2) + rho11 + mu**2 * rho22**2))
    )
    return np.abs(value)


def bures_single_quat(rho11, rho22, r2, mu):
    a = -(rho11**2) * rho22**2 * (rho11 + rho22 - 1.0) ** 2
    b = 4.0 * np.sqrt(1.0 - r2) * (rho22 * mu**2 + rho11) * (-(rho11**2) + rho11 + mu**2 * rho22**2) ** 2
    return np.abs(a / b)


def bures_chain_real(rho11, rho22, x12, x23, mu):
    mu2 = mu * mu
    q = -(rho11**2) + rho11 + mu2 * rho22**2
    tilt = (mu2 - 1.0) * rho22 + 1.0
    a = -(rho11**2) * rho22**2 * (rho11 + rho22 - 1.0) * tilt
    b = (rho22 * mu2 + rho11) ** 2
    c = x12**2 + x23**2 - 1.0
    d = (rho11 + rho22) * (x12**2 * rho22 * (rho22 * mu2 + rho11) ** 2 - tilt * q)
    e = -(x23**2) * rho22 * (rho11 + rho22 - 1.0) * q
    return 0.25 * np.sqrt(np.abs(a / (b * c * (d + e))))


def bures_two_real(rho11, rho22, rho33, x14, x23):
    value = -1.0 / ((x14**2 - 1.0) * (x23**2 - 1.0) * (rho22 + rho33 - 1.0) * (rho22 + rho33))
    return 0.125 * np.sqrt(value)


def bures_two_complex(rho11, rho22, rho33, r14, r23):
    f = -(r14**2) * r23**2 * rho11 * rho22 * rho33 * (rho11 + rho22 + rho33 - 1.0)
    g = (r14**2 - 1.0) * (r23**2 - 1.0) * (rho22 + rho33 - 1.0) ** 2 * (rho22 + rho33) ** 2
    return 0.125 * np.sqrt(f / g)


def bures_two_quat(rho11, rho22, rho33, polar14, polar23):
    # No outer square root: with it the total volume would not come out as π⁶/245760.
    r14, a1, a2 = polar14[0], polar14[1], polar14[2]
    r23, b1, b2 = polar23[0], polar23[1], polar23[2]
    f = (
        np.sin(a1) ** 2 * np.sin(a2) * np.sin(b1) ** 2 * np.sin(b2)
        * r14**3 * r23**3 * rho11**1.5 * rho22**1.5
        * (-rho11 - rho22 - rho33 + 1.0) ** 1.5 * rho33**1.5
    )
    g = np.sqrt(1.0 - r14**2) * np.sqrt(1.0 - r23**2) * (rho22 + rho33 - 1.0) ** 2 * (rho22 + rho33) ** 2
    return 0.125 * f / g


def diagonal_factor(s: Scenario, rho11, rho22, rho33, metric: Metric | None = None):
    """
    Diagonal part of a factorizable volume element, per dρ11 dρ22 dρ33. Multiplied by
    Π radial_weight(|q_e|) it gives the Cartesian closed-form density.
    """
    metric = metric or s.metric
    k = s.components
    rho44 = 1.0 - rho11 - rho22 - rho33
    if metric == "hs":
        out = 2.0
        for i, j in s.entries:
            d = (rho11, rho22, rho33, rho44)
            out = out * (2.0 * d[i - 1] * d[j - 1]) ** (k / 2.0)
        return out
    t = rho22 + rho33
    if s.shape == "single":
        return (rho22 * rho33) ** ((k - 1) / 2.0) / (8.0 * np.sqrt(rho11 * rho44) * t ** (k / 2.0))
    if s.shape == "two":
        return (rho11 * rho22 * rho33 * rho44) ** ((k - 1) / 2.0) / (8.0 * ((1.0 - t) * t) ** (k / 2.0))
    raise UnsupportedScenarioError(f"{s} has no factorized Bures volume element")


def radial_weight(metric: Metric, r):
    """Off-diagonal factor as a function of the Bloore norm of one entry."""
    r = np.asarray(r, dtype=float)
    if metric == "hs":
        return np.ones_like(r)
    return 1.0 / np.sqrt(1.0 - r * r)


def sphere_area(k: int) -> float:
    """Area of the unit sphere S^{k-1} in R^k (two points for k = 1)."""
    return 2.0 * math.pi ** (k / 2.0) / math.gamma(k / 2.0)


def _factorized_cartesian(p: BloorePoint, s: Scenario, metric: Metric) -> float:
    value = diagonal_factor(s, p.rho11, p.rho22, p.rho33, metric)
    for entry in p.coords:
        value = value * radial_weight(metric, math.sqrt(sum(c * c for c in entry)))
    return float(value)


def _native_bures(p: BloorePoint, s: Scenario) -> tuple[float, float]:
    """(native density, native-per-Cartesian factor)."""
    rho11, rho22, rho33 = p.rho11, p.rho22, p.rho33
    if s.shape in ("single", "chain"):
        mu = mu_of(p).mu
        jac = float(mu_chart_jacobian(rho11, rho22, mu))
        if s.shape == "chain":
            if s.algebra != "real":
                raise UnsupportedScenarioError(f"{s} has no closed-form volume element")
            (x12,), (x23,) = p.coords
            return float(bures_chain_real(rho11, rho22, x12, x23, mu)), jac
        coords = p.coords[0]
        if s.algebra == "real":
            return float(bures_single_real(rho11, rho22, coords[0], mu)), jac
        if s.algebra == "complex":
            return float(bures_single_complex(rho11, rho22, coords[0], coords[1], mu)), jac
        if s.zeroed == 0:
            return float(bures_single_quat(rho11, rho22, sum(c * c for c in coords), mu)), jac
        return _factorized_cartesian(p, s, "bures") * jac, jac

    (q14, q23) = p.coords
    if s.algebra == "real":
        return float(bures_two_real(rho11, rho22, rho33, q14[0], q23[0])), 1.0
    if s.algebra == "complex":
        r14, r23 = math.hypot(*q14), math.hypot(*q23)
        return float(bures_two_complex(rho11, rho22, rho33, r14, r23)), r14 * r23
    polar14, polar23 = to_polar(q14), to_polar(q23)
    native = float(bures_two_quat(rho11, rho22, rho33, polar14[:3], polar23[:3]))
    return native, polar_jacobian(polar14) * polar_jacobian(polar23)


def volume_density_closed(
    p: BloorePoint,
    s: Scenario,
    metric: Metric | None = None,
    chart: Chart = "cartesian",
) -> float:
    """
    Closed-form volume element. `native` evaluates the expression in the chart it is stated in;
    `cartesian` converts it to dρ11 dρ22 dρ33 and Cartesian off-diagonal coordinates.
    """
    metric = metric or s.metric
    check_point(p, s)
    if s.shape == "other" or (s.shape == "chain" and s.algebra != "real" and metric == "bures"):
        raise UnsupportedScenarioError(f"{s} has no closed-form volume element")
    if s.zeroed and s.shape != "single":
        raise UnsupportedScenarioError(f"{s} has no closed-form volume element")

    if metric == "hs":
        k = s.components
        d = p.diagonal
        value = 2.0
        for i, j in s.entries:
            value *= (2.0 * d[i - 1] * d[j - 1]) ** (k / 2.0)
        return value

    native, factor = _native_bures(p, s)
    if chart == "native":
        return native
    return native / factor


__all__ = [
    "MetricTensor",
    "tangent_basis",
    "bures_metric",
    "hs_metric",
    "metric_tensor",
    "volume_density_numeric",
    "volume_density_closed",
    "mu_chart_jacobian",
    "bures_single_real",
    "bures_single_complex",
    "bures_single_quat",
    "bures_chain_real",
    "bures_two_real",
    "bures_two_complex",
    "bures_two_quat",
    "diagonal_factor",
    "radial_weight",
    "sphere_area",
]
