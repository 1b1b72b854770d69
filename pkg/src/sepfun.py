from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
import math
from typing import Callable, Literal, Sequence

import numpy as np
from loguru import logger

from src.bloore import ppt_radius
from src.errors import UnsupportedScenarioError
from src.metric import radial_weight, sphere_area
from src.quadrature import (
    IntegrandSpec,
    SubstitutionKind,
    integrate_adaptive,
    integrate_qmc,
)
from src.schema.report import DysonReport, DysonRow, EngineConfig, IntegrationResult
from src.schema.scenario import SINGLE_ENTRY, TWO_ENTRY, Metric, Scenario

Family = Literal["single", "two"]
NumericEngine = Literal["adaptive", "qmc"]

PI = math.pi
HS_EXACT_THRESHOLD = 1e-12
BURES_NEAR_MISS_THRESHOLD = 0.15

Expr = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SeparabilityFunction:
    """
    Piecewise closed form on (0, 1), at μ = 1 and on (1, ∞), times a constant `scale`
    (1 for the raw function, 1/S(1) once normalized).
    """

    scenario: Scenario
    below: Expr
    at_one: float
    above: Expr
    formula: str
    convention: float = 1.0
    scale: float = 1.0

    def __call__(self, mu):
        mu = np.asarray(mu, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            below = self.below(np.minimum(mu, 1.0))
            above = self.above(np.maximum(mu, 1.0))
        out = np.where(mu < 1.0, below, np.where(mu > 1.0, above, self.at_one))
        out = self.scale * out
        return float(out) if out.ndim == 0 else out

    @property
    def normalization_value(self) -> float:
        return self.scale * self.at_one

    @property
    def normalized(self) -> bool:
        return math.isclose(self.normalization_value, 1.0, rel_tol=0.0, abs_tol=1e-15)


def _sqrt1m(mu):
    return np.sqrt(np.maximum(1.0 - mu * mu, 0.0))


def _sqrtm1(mu):
    return np.sqrt(np.maximum(mu * mu - 1.0, 0.0))


def _const(value: float) -> Expr:
    return lambda mu: np.full_like(mu, value, dtype=float)


def _hs_single(k: int) -> tuple[Expr, float, Expr, str]:
    ball = math.pi ** (k / 2.0) / math.gamma(k / 2.0 + 1.0)
    return (
        lambda mu: ball * mu**k,
        ball,
        _const(ball),
        f"V_{k}·min(μ,1)^{k}",
    )


def _hs_two(k: int) -> tuple[Expr, float, Expr, str]:
    ball = math.pi ** (k / 2.0) / math.gamma(k / 2.0 + 1.0)
    return (
        lambda mu: ball**2 * mu**k,
        ball**2,
        lambda mu: ball**2 / mu**k,
        f"V_{k}²·min(μ,1/μ)^{k}",
    )


def _bures_radial(k: int) -> Expr:
    """∫ over the Bloore ball of radius m of 1/sqrt(1 − r²), angular part included."""
    if k == 1:
        return lambda m: 2.0 * np.arcsin(m)
    if k == 2:
        return lambda m: 2.0 * PI * (1.0 - _sqrt1m(m))
    if k == 3:
        return lambda m: 2.0 * PI * (np.arcsin(m) - m * _sqrt1m(m))
    if k == 4:
        return lambda m: (2.0 * PI**2 / 3.0) * (2.0 - (m * m + 2.0) * _sqrt1m(m))
    raise ValueError(f"no Bures radial integral for {k} components")


_BURES_SINGLE = {
    1: ("2·asin(μ) | π", PI),
    2: ("2π(1 − sqrt(1 − μ²)) | 2π", 2.0 * PI),
    3: ("2π(asin(μ) − μ·sqrt(1 − μ²)) | π²", PI**2),
    4: ("(2π²/3)(2 − (μ² + 2)·sqrt(1 − μ²)) | 4π²/3", 4.0 * PI**2 / 3.0),
}


def _bures_two(k: int) -> tuple[Expr, float, Expr, str, float]:
    if k == 1:
        return (
            lambda mu: 2.0 * PI * np.arcsin(mu),
            PI**2,
            lambda mu: 2.0 * PI * np.arcsin(1.0 / mu),
            "2π·asin(μ) | π² | 2π·acsc(μ)",
            1.0,
        )
    if k == 2:
        return (
            lambda mu: 16.0 * PI**2 * (1.0 - _sqrt1m(mu)),
            16.0 * PI**2,
            lambda mu: 16.0 * PI**2 * (1.0 - _sqrtm1(mu) / mu),
            "16π²(1 − sqrt(1 − μ²)) | 16π² | 16π²(1 − sqrt(μ² − 1)/μ)",
            4.0,
        )
    if k == 4:
        return (
            lambda mu: (8.0 / 9.0) * PI**4 * (-_sqrt1m(mu) * mu**2 - 2.0 * _sqrt1m(mu) + 2.0),
            16.0 * PI**4 / 9.0,
            lambda mu: -8.0 * PI**4 * (2.0 * (_sqrtm1(mu) - mu) * mu**2 + _sqrtm1(mu)) / (9.0 * mu**3),
            "(8π⁴/9)(2 − (μ² + 2)·sqrt(1 − μ²)) | 16π⁴/9 | −8π⁴(2(sqrt(μ² − 1) − μ)μ² + sqrt(μ² − 1))/(9μ³)",
            1.0,
        )
    raise UnsupportedScenarioError(f"no two-entry Bures separability function for {k} components")


@lru_cache(maxsize=None)
def separability_function(s: Scenario) -> SeparabilityFunction:
    """Cataloged closed form S(μ) for `s`; raises UnsupportedScenarioError otherwise."""
    k = s.components
    if s.entries == SINGLE_ENTRY:
        if s.metric == "hs":
            below, at_one, above, formula = _hs_single(k)
            return SeparabilityFunction(s, below, at_one, above, formula)
        formula, at_one = _BURES_SINGLE[k]
        radial = _bures_radial(k)
        return SeparabilityFunction(s, radial, at_one, _const(at_one), formula)
    if s.entries == TWO_ENTRY and s.zeroed == 0:
        if s.metric == "hs":
            below, at_one, above, formula = _hs_two(k)
            return SeparabilityFunction(s, below, at_one, above, formula)
        below, at_one, above, formula, convention = _bures_two(k)
        return SeparabilityFunction(s, below, at_one, above, formula, convention=convention)
    raise UnsupportedScenarioError(
        f"{s} has no univariate separability function; use volumes.total_volume for direct integration"
    )


def sep_function_closed(s: Scenario, mu) -> float | np.ndarray:
    return separability_function(s)(mu)


def normalize(f: SeparabilityFunction) -> SeparabilityFunction:
    value = f.normalization_value
    if value <= 0.0:
        raise ValueError(f"cannot normalize a function with S(1) = {value}")
    return replace(f, scale=f.scale / value)


def conjectured_s_real(mu):
    """(1/2)(3 − μ²)μ, unnormalized."""
    mu = np.asarray(mu, dtype=float)
    out = 0.5 * (3.0 - mu * mu) * mu
    return float(out) if out.ndim == 0 else out


def printed_quat1_form(mu):
    """
    Bures quaternionic separability function with one component zeroed, exactly as printed:
    negative for μ < 1 and ≈ 1.859 for μ > 1. Kept for comparison with the pullback-derived form.
    """
    mu = np.asarray(mu, dtype=float)
    log_term = math.sqrt(2.0) * math.log(3.0 + 2.0 * math.sqrt(2.0) - 4.0)
    with np.errstate(invalid="ignore"):
        below = 0.25 * PI * (mu * _sqrt1m(mu) - np.arcsin(np.minimum(mu, 1.0))) * log_term
    above = 0.125 * PI**2 * (4.0 - math.sqrt(2.0) * math.log(3.0 + 2.0 * math.sqrt(2.0)))
    out = np.where(mu < 1.0, below, above)
    return float(out) if out.ndim == 0 else out


def _radial_spec(metric: Metric, k: int, radii: Sequence[float]) -> IntegrandSpec:
    """Product of per-entry radial integrals over r_e ∈ [0, m_e], r = m·sin t."""
    dims = len(radii)
    area = sphere_area(k)
    m = np.array(radii, dtype=float)

    def density(t: np.ndarray) -> np.ndarray:
        r = m * np.sin(t)
        values = area * r ** (k - 1) * radial_weight(metric, r) * m * np.cos(t)
        return np.prod(values, axis=1)

    return IntegrandSpec(
        lower=(0.0,) * dims,
        upper=(math.pi / 2.0,) * dims,
        density=density,
        substitutions=(SubstitutionKind.ARCSINE,) * dims,
    )


def _cartesian_spec(s: Scenario, mu: float) -> IntegrandSpec:
    """Off-diagonal factor over the Cartesian box [−1, 1]^{entries·k} cut by positivity and PPT."""
    k = s.components
    limits = np.array([float(ppt_radius(e, mu)) for e in s.entries])

    def norms(x: np.ndarray) -> np.ndarray:
        return np.sqrt(np.stack([np.sum(x[:, e * k : (e + 1) * k] ** 2, axis=1) for e in range(len(s.entries))], axis=1))

    def indicator(x: np.ndarray) -> np.ndarray:
        return np.all(norms(x) <= limits, axis=1)

    def density(x: np.ndarray) -> np.ndarray:
        return np.prod(radial_weight(s.metric, norms(x)), axis=1)

    d = len(s.entries) * k
    return IntegrandSpec(lower=(-1.0,) * d, upper=(1.0,) * d, density=density, indicator=indicator)


def sep_function_numeric(
    s: Scenario,
    mu: float,
    engine: NumericEngine = "adaptive",
    config: EngineConfig | None = None,
) -> IntegrationResult:
    """
    Integrate the off-diagonal factor of the volume element over the region where ρ and its partial
    transpose are positive, then apply the cataloged convention constant.
    """
    config = config or EngineConfig()
    f = separability_function(s)
    if mu <= 0.0:
        raise ValueError(f"μ must be positive, got {mu}")
    if engine == "adaptive":
        radii = [float(ppt_radius(e, mu)) for e in s.entries]
        result = integrate_adaptive(
            _radial_spec(s.metric, s.components, radii),
            rel_tol=max(config.rel_tol, 1e-8),
            max_evals=config.max_evals,
        )
    elif engine == "qmc":
        result = integrate_qmc(_cartesian_spec(s, mu), n_points=config.qmc_n, seed=config.seed, replicates=config.replicates)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return result.scaled(f.convention)


def pin_convention(s: Scenario, config: EngineConfig | None = None) -> float:
    """Ratio of the cataloged S(1) to the raw off-diagonal integral at μ = 1."""
    f = separability_function(s)
    raw = sep_function_numeric(s, 1.0, "adaptive", config).estimate / f.convention
    ratio = f.at_one / raw
    logger.debug("convention constant: scenario={}, ratio={}, cataloged={}", s, ratio, f.convention)
    return ratio


def mu_grid(n: int = 201, mu_max: float = 2.0) -> np.ndarray:
    """
    n uniform points on [0, μ_max] with the first one moved to half a step so the grid lies in
    (0, μ_max]. μ = 1 is always present exactly.
    """
    if n < 2 or mu_max <= 0.0:
        raise ValueError(f"need n >= 2 and mu_max > 0, got n={n}, mu_max={mu_max}")
    grid = np.linspace(0.0, mu_max, n)
    grid[0] = 0.5 * grid[1]
    if mu_max >= 1.0:
        close = np.isclose(grid, 1.0, rtol=0.0, atol=1e-12)
        if close.any():
            grid[close] = 1.0
        else:
            grid = np.sort(np.append(grid, 1.0))
    return grid


def dyson_report(metric: Metric, family: Family = "single", grid: Sequence[float] | None = None) -> DysonReport:
    """
    Normalized real⁴, complex² and quaternionic curves on `grid` with their pairwise sup deviations.
    HS curves coincide exactly; Bures ones only nearly.
    """
    grid = np.asarray(mu_grid() if grid is None else grid, dtype=float)
    if np.any(grid <= 0.0):
        raise ValueError("dyson grid must lie in (0, μ_max]")
    entries = SINGLE_ENTRY if family == "single" else TWO_ENTRY
    curves = {}
    for algebra in ("real", "complex", "quat"):
        f = normalize(separability_function(Scenario(metric=metric, entries=entries, algebra=algebra)))
        curves[algebra] = f

    power = {"real": 4, "complex": 2, "quat": 1}
    values = {a: np.asarray(curves[a](grid)) ** power[a] for a in curves}
    dev_rc = np.abs(values["real"] - values["complex"])
    dev_rq = np.abs(values["real"] - values["quat"])
    dev_cq = np.abs(values["complex"] - values["quat"])

    sym = None
    if family == "two":
        mirrored = {a: np.asarray(curves[a](1.0 / grid)) ** power[a] for a in curves}
        sym = np.max(np.stack([np.abs(values[a] - mirrored[a]) for a in curves]), axis=0)

    rows = [
        DysonRow(
            mu=float(mu),
            s_real_norm_pow4=float(values["real"][i]),
            s_complex_norm_pow2=float(values["complex"][i]),
            s_quat_norm=float(values["quat"][i]),
            dev_rc=float(dev_rc[i]),
            dev_rq=float(dev_rq[i]),
            dev_cq=float(dev_cq[i]),
            sym_dev=None if sym is None else float(sym[i]),
        )
        for i, mu in enumerate(grid)
    ]
    threshold = HS_EXACT_THRESHOLD if metric == "hs" else BURES_NEAR_MISS_THRESHOLD
    report = DysonReport(
        metric=metric,
        family=family,
        rows=rows,
        max_dev_rc=float(dev_rc.max()),
        max_dev_rq=float(dev_rq.max()),
        max_dev_cq=float(dev_cq.max()),
        threshold=threshold,
        exact=bool(max(dev_rc.max(), dev_rq.max(), dev_cq.max()) <= HS_EXACT_THRESHOLD),
    )
    logger.debug(
        "dyson report: metric={}, family={}, dev_rc={}, dev_rq={}, dev_cq={}",
        metric,
        family,
        report.max_dev_rc,
        report.max_dev_rq,
        report.max_dev_cq,
    )
    return report


__all__ = [
    "SeparabilityFunction",
    "separability_function",
    "sep_function_closed",
    "sep_function_numeric",
    "normalize",
    "pin_convention",
    "conjectured_s_real",
    "printed_quat1_form",
    "mu_grid",
    "dyson_report",
]
