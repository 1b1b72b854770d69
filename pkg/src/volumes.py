from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Literal

import numpy as np
from loguru import logger
from scipy import special

from src.bloore import diagonal_from_mu, ppt_radius
from src.errors import UndefinedProbabilityError, UnsupportedScenarioError
from src.metric import bures_chain_real, diagonal_factor, mu_chart_jacobian, radial_weight, sphere_area
from src.quadrature import (
    IntegrandSpec,
    SubstitutionKind,
    integrate,
    integrate_adaptive,
    with_substitutions,
)
from src.schema.report import EngineConfig, IntegrationResult, ReferenceRow, VolumeReport
from src.schema.scenario import Scenario, in_catalog
from src.sepfun import separability_function

Region = Literal["full", "lower", "upper"]
Quantity = Literal["total", "separable"]
Route = Literal["factorized", "direct"]

PI = math.pi
_ARC = SubstitutionKind.ARCSINE
_ARC2 = SubstitutionKind.ARCSINE_BOTH


def catalan() -> float:
    """Catalan's constant via the trigamma function: ψ1(1/4) = π² + 8G."""
    return float((special.polygamma(1, 0.25) - PI**2) / 8.0)


@dataclass(frozen=True)
class Probability:
    value: float
    error: float


def simplex_map(t: np.ndarray, region: Region = "full"):
    """
    Unit cube (a, b, w) -> (ρ11, ρ22, ρ33, jacobian). ρ11 = a, ρ22 = (1 − a)b; ρ33 sweeps the whole
    remaining range ("full"), the part with μ ≤ 1 ("lower") or the part with μ ≥ 1 ("upper").
    """
    a, b, w = t[:, 0], t[:, 1], t[:, 2]
    rho11 = a
    rho22 = (1.0 - a) * b
    rest = (1.0 - a) * (1.0 - b)
    if region == "full":
        return rho11, rho22, rest * w, (1.0 - a) * rest
    split = rho11 * rest / (rho11 + rho22)
    if region == "lower":
        return rho11, rho22, split + (rest - split) * w, (1.0 - a) * (rest - split)
    if region == "upper":
        return rho11, rho22, split * w, (1.0 - a) * split
    raise ValueError(f"unknown region {region!r}")


def _mu(rho11, rho22, rho33):
    rho44 = 1.0 - rho11 - rho22 - rho33
    return np.sqrt(rho11 * rho44 / (rho22 * rho33))


def _require_factorizable(s: Scenario) -> None:
    if not s.is_factorizable or not in_catalog(s):
        raise UnsupportedScenarioError(f"{s} does not factorize into diagonal and off-diagonal parts")


def _simplex_spec(density, extra_axes: int = 0, extra_subs: dict[int, SubstitutionKind] | None = None,
                  extra_upper: tuple[float, ...] | None = None) -> IntegrandSpec:
    upper = (1.0, 1.0, 1.0) + (extra_upper or (1.0,) * extra_axes)
    spec = IntegrandSpec(lower=(0.0,) * len(upper), upper=upper, density=density)
    subs = {0: _ARC2, 1: _ARC2, 2: _ARC2}
    subs.update(extra_subs or {})
    return with_substitutions(spec, subs)


def factorized_spec(s: Scenario, quantity: Quantity, region: Region) -> IntegrandSpec:
    """S(μ)·(diagonal factor) over the diagonal simplex; S(1) replaces S(μ) for the total."""
    _require_factorizable(s)
    f = separability_function(s)
    total = f.at_one * f.scale

    def density(t: np.ndarray) -> np.ndarray:
        rho11, rho22, rho33, jac = simplex_map(t, region)
        weight = total if quantity == "total" else f(_mu(rho11, rho22, rho33))
        return weight * diagonal_factor(s, rho11, rho22, rho33) * jac

    return _simplex_spec(density)


def direct_spec(s: Scenario, quantity: Quantity, region: Region) -> IntegrandSpec:
    """
    The volume element over the diagonal simplex and one radial variable per free entry; the
    angular integrals are done analytically and the PPT region becomes r_e ≤ m_e(μ).
    """
    _require_factorizable(s)
    k = s.components
    n = len(s.entries)
    area = sphere_area(k)

    def density(t: np.ndarray) -> np.ndarray:
        rho11, rho22, rho33, jac = simplex_map(t[:, :3], region)
        out = diagonal_factor(s, rho11, rho22, rho33) * jac
        mu = _mu(rho11, rho22, rho33) if quantity == "separable" else None
        for e, entry in enumerate(s.entries):
            m = 1.0 if mu is None else ppt_radius(entry, mu)
            r = m * t[:, 3 + e]
            out = out * area * r ** (k - 1) * radial_weight(s.metric, r) * m
        return out

    return _simplex_spec(density, extra_axes=n, extra_subs={3 + e: _ARC for e in range(n)})


def ball_norm(y: np.ndarray):
    """
    Cube [−1, 1]^k -> Bloore ball: y ↦ y·sin(π|y|/2)/|y|, |y| ≤ 1. Returns (|x|, |y|, jacobian)
    so that 1/sqrt(1 − |x|²)·jacobian stays bounded.
    """
    k = y.shape[1]
    rho = np.sqrt(np.sum(y * y, axis=1))
    r = np.sin(0.5 * PI * rho)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(rho > 0.0, r / rho, 0.5 * PI)
    return r, rho, ratio ** (k - 1) * 0.5 * PI * np.cos(0.5 * PI * rho)


def cartesian_spec(s: Scenario, quantity: Quantity) -> IntegrandSpec:
    """Full-dimensional form (3 + entries·k variables) with indicator regions, for QMC checks."""
    _require_factorizable(s)
    k = s.components
    n = len(s.entries)

    def blocks(t: np.ndarray):
        return [ball_norm(t[:, 3 + e * k : 3 + (e + 1) * k]) for e in range(n)]

    def indicator(t: np.ndarray) -> np.ndarray:
        rho11, rho22, rho33, _ = simplex_map(t[:, :3], "full")
        mu = _mu(rho11, rho22, rho33) if quantity == "separable" else None
        ok = np.ones(t.shape[0], dtype=bool)
        for entry, (r, rho, _) in zip(s.entries, blocks(t)):
            ok &= rho <= 1.0
            if mu is not None:
                ok &= r <= ppt_radius(entry, mu)
        return ok

    def density(t: np.ndarray) -> np.ndarray:
        rho11, rho22, rho33, jac = simplex_map(t[:, :3], "full")
        out = diagonal_factor(s, rho11, rho22, rho33) * jac
        for r, _, ball_jac in blocks(t):
            out = out * radial_weight(s.metric, r) * ball_jac
        return out

    d = 3 + n * k
    spec = IntegrandSpec(
        lower=(0.0, 0.0, 0.0) + (-1.0,) * (n * k),
        upper=(1.0,) * d,
        density=density,
        indicator=indicator,
    )
    return with_substitutions(spec, {0: _ARC2, 1: _ARC2, 2: _ARC2})


def chain_spec(s: Scenario) -> IntegrandSpec:
    """[(1,2),(2,3)] real: (a, b, w) plus polar (r, θ) for (x12, x23) with r = sin t."""
    if s.shape != "chain" or s.algebra != "real":
        raise UnsupportedScenarioError(f"{s} has no direct total-volume integrand")

    def density(t: np.ndarray) -> np.ndarray:
        rho11, rho22, rho33, jac = simplex_map(t[:, :3], "full")
        r, theta = t[:, 3], t[:, 4]
        x12, x23 = r * np.cos(theta), r * np.sin(theta)
        if s.metric == "hs":
            value = 2.0 * np.sqrt(2.0 * rho11 * rho22) * np.sqrt(2.0 * rho22 * rho33)
        else:
            mu = _mu(rho11, rho22, rho33)
            value = bures_chain_real(rho11, rho22, x12, x23, mu) / mu_chart_jacobian(rho11, rho22, mu)
        return value * r * jac

    return _simplex_spec(density, extra_subs={3: _ARC}, extra_upper=(1.0, 2.0 * PI))


def marginal_jacobian(s: Scenario, mu: float, config: EngineConfig | None = None) -> IntegrationResult:
    """
    J(μ): the diagonal factor integrated over (ρ11, ρ22) at fixed μ. For μ > 1 the upper chart
    λ = 1/μ is used and J(μ) = Ĵ(λ)/μ².
    """
    _require_factorizable(s)
    if mu <= 0.0:
        raise ValueError(f"μ must be positive, got {mu}")
    config = config or EngineConfig()
    branch = "lower" if mu <= 1.0 else "upper"
    lam = mu if mu <= 1.0 else 1.0 / mu

    def density(t: np.ndarray) -> np.ndarray:
        a, b = t[:, 0], t[:, 1]
        rho11, rho22 = a, (1.0 - a) * b
        rho33, _, jac = diagonal_from_mu(rho11, rho22, lam, branch)
        return diagonal_factor(s, rho11, rho22, rho33) * jac * (1.0 - a)

    spec = with_substitutions(
        IntegrandSpec(lower=(0.0, 0.0), upper=(1.0, 1.0), density=density),
        {0: _ARC2, 1: _ARC2},
    )
    result = integrate_adaptive(spec, rel_tol=config.rel_tol, max_evals=config.max_evals)
    return result if mu <= 1.0 else result.scaled(1.0 / (mu * mu))


def nested_s_times_j(s: Scenario, quantity: Quantity = "separable", config: EngineConfig | None = None) -> IntegrationResult:
    """∫₀^∞ S(μ)·J(μ) dμ as an outer 1D integral over λ ∈ (0, 1] on both branches."""
    _require_factorizable(s)
    config = config or EngineConfig()
    inner = config.model_copy(update={"rel_tol": max(config.rel_tol * 0.1, 1e-8)})
    f = separability_function(s)
    parts = []
    for branch in ("lower", "upper"):

        def density(t: np.ndarray, branch=branch) -> np.ndarray:
            out = np.empty(t.shape[0])
            for i, lam in enumerate(t[:, 0]):
                mu = lam if branch == "lower" else 1.0 / lam
                weight = f.at_one * f.scale if quantity == "total" else f(mu)
                jac = marginal_jacobian(s, mu, inner).estimate
                out[i] = weight * jac * (1.0 if branch == "lower" else mu * mu)
            return out

        spec = with_substitutions(IntegrandSpec(lower=(0.0,), upper=(1.0,), density=density), {0: _ARC2})
        parts.append(integrate_adaptive(spec, rel_tol=config.rel_tol, max_evals=config.max_evals))
    return IntegrationResult.combine(parts)


def _run(specs: list[IntegrandSpec], config: EngineConfig, engine: str) -> IntegrationResult:
    return IntegrationResult.combine([integrate(spec, config, engine) for spec in specs])


def _reported(s: Scenario, raw: IntegrationResult) -> IntegrationResult:
    """Scale a raw direct or Cartesian result by the convention constant; S(μ) already carries it."""
    return raw.scaled(separability_function(s).convention)


def total_volume(
    s: Scenario,
    config: EngineConfig | None = None,
    route: Route = "factorized",
    engine: str = "auto",
    reduce_angles: bool = True,
) -> IntegrationResult:
    """Volume of the positivity region under the volume element of `s`."""
    config = config or EngineConfig()
    if s.shape == "chain":
        result = integrate(chain_spec(s), config, engine)
    elif route == "factorized":
        result = integrate(factorized_spec(s, "total", "full"), config, engine)
    elif reduce_angles:
        result = _reported(s, integrate(direct_spec(s, "total", "full"), config, engine))
    else:
        result = _reported(s, integrate(cartesian_spec(s, "total"), config, "qmc" if engine == "auto" else engine))
    logger.debug("total volume: scenario={}, route={}, estimate={}, err={}", s, route, result.estimate, result.error_estimate)
    return result


def separable_volume(
    s: Scenario,
    config: EngineConfig | None = None,
    route: Route = "factorized",
    engine: str = "auto",
    reduce_angles: bool = True,
) -> IntegrationResult:
    """PPT-constrained volume; the simplex is split at μ = 1 where S(μ) has its kink."""
    config = config or EngineConfig()
    if s.shape == "chain":
        raise UnsupportedScenarioError(f"{s}: no separable volume for the non-factorizable scenario")
    if route == "factorized":
        result = _run([factorized_spec(s, "separable", r) for r in ("lower", "upper")], config, engine)
    elif reduce_angles:
        result = _reported(s, _run([direct_spec(s, "separable", r) for r in ("lower", "upper")], config, engine))
    else:
        result = _reported(s, integrate(cartesian_spec(s, "separable"), config, "qmc" if engine == "auto" else engine))
    logger.debug(
        "separable volume: scenario={}, route={}, estimate={}, err={}", s, route, result.estimate, result.error_estimate
    )
    return result


def separability_probability(separable: IntegrationResult, total: IntegrationResult) -> Probability:
    """Ratio with relative errors added in quadrature."""
    if total.estimate == 0.0 or abs(total.estimate) <= total.error_estimate:
        raise UndefinedProbabilityError(f"total volume {total.estimate} is indistinguishable from zero")
    value = separable.estimate / total.estimate
    rel_sep = separable.error_estimate / abs(separable.estimate) if separable.estimate else 0.0
    rel_tot = total.error_estimate / abs(total.estimate)
    return Probability(value, abs(value) * math.hypot(rel_sep, rel_tot))


def reference_table() -> list[ReferenceRow]:
    g = catalan()
    rows = [
        ("bures:[(2,3)]:real", "total", PI**2 / 12.0, "π²/12", "published"),
        ("bures:[(2,3)]:real", "separable", 0.3658435525, None, "published"),
        ("bures:[(2,3)]:real", "probability", 0.4448124200, None, "published"),
        ("bures:[(2,3)]:complex", "total", PI**3 / 64.0, "π³/64", "published"),
        ("bures:[(2,3)]:complex", "separable", PI**2 * (4.0 * g - 6.0 + PI) / 64.0, "π²(4C − 6 + π)/64", "published"),
        ("bures:[(2,3)]:complex", "probability", (4.0 * g - 6.0 + PI) / PI, "(4C − 6 + π)/π", "published"),
        ("bures:[(2,3)]:quat", "total", PI**4 / 768.0, "π⁴/768", "published"),
        ("bures:[(2,3)]:quat", "separable", 0.012954754466, None, "published"),
        ("bures:[(2,3)]:quat", "probability", 0.10213883862, None, "published"),
        ("bures:[(2,3)]:quat-1", "total", PI**3 / 120.0, "π³/120", "derived"),
        ("bures:[(1,4),(2,3)]:real", "total", PI**3 / 64.0, "π³/64", "published"),
        ("bures:[(1,4),(2,3)]:real", "separable", 0.1473885131, None, "published"),
        ("bures:[(1,4),(2,3)]:real", "probability", 0.3042243652, None, "published"),
        ("bures:[(1,4),(2,3)]:complex", "total", 4.0 * PI**4 / 768.0, "4·π⁴/768 = π⁴/192 (raw element π⁴/768)", "published"),
        ("bures:[(1,4),(2,3)]:complex", "separable", 0.096915844, None, "published"),
        ("bures:[(1,4),(2,3)]:complex", "probability", 0.19102778, None, "published"),
        ("bures:[(1,4),(2,3)]:quat", "total", PI**6 / 245760.0, "π⁶/245760", "published"),
        ("bures:[(1,4),(2,3)]:quat", "separable", 0.000471134100, None, "published"),
        ("bures:[(1,4),(2,3)]:quat", "probability", 0.120436049, None, "published"),
        ("hs:[(2,3)]:real", "probability", 3.0 * PI / 16.0, "3π/16", "published"),
        ("hs:[(2,3)]:complex", "probability", 1.0 / 3.0, "1/3", "published"),
        ("hs:[(2,3)]:quat", "probability", 0.1, "1/10", "published"),
    ]
    return [
        ReferenceRow(scenario=sc, quantity=q, value=v, expression=expr, provenance=prov)
        for sc, q, v, expr, prov in rows
    ]


def reference_for(s: Scenario, quantity: str) -> ReferenceRow | None:
    label = s.label()
    for row in reference_table():
        if row.scenario == label and row.quantity == quantity:
            return row
    return None


def volume_report(
    s: Scenario,
    config: EngineConfig | None = None,
    route: Route = "factorized",
    engine: str = "auto",
) -> VolumeReport:
    config = config or EngineConfig()
    total = total_volume(s, config, route, engine)
    separable = None
    probability = None
    if s.is_factorizable:
        separable = separable_volume(s, config, route, engine)
        probability = separability_probability(separable, total)

    reference = reference_for(s, "probability") if probability is not None else None
    reference = reference or reference_for(s, "total")
    compared = None
    if reference is not None:
        compared = probability.value if reference.quantity == "probability" else total.estimate
    rel_dev = abs(compared - reference.value) / abs(reference.value) if reference is not None else None

    converged = total.converged and (separable is None or separable.converged)
    evaluations = total.evaluations + (separable.evaluations if separable else 0)
    return VolumeReport(
        scenario=s.label(),
        metric=s.metric,
        method=route if s.is_factorizable else "direct",
        total=total.estimate,
        total_err=total.error_estimate,
        separable=separable.estimate if separable else None,
        separable_err=separable.error_estimate if separable else None,
        probability=probability.value if probability else None,
        probability_err=probability.error if probability else None,
        reference=reference.value if reference else None,
        rel_dev_from_reference=rel_dev,
        converged=converged,
        evaluations=evaluations,
        engine_config=config,
        seed=config.seed if (total.engine == "qmc" or (separable and separable.engine == "qmc")) else None,
    )


__all__ = [
    "catalan",
    "Probability",
    "simplex_map",
    "factorized_spec",
    "direct_spec",
    "cartesian_spec",
    "chain_spec",
    "ball_norm",
    "marginal_jacobian",
    "nested_s_times_j",
    "total_volume",
    "separable_volume",
    "separability_probability",
    "reference_table",
    "reference_for",
    "volume_report",
]
