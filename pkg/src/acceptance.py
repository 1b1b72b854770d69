from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Callable, Literal

import numpy as np
from loguru import logger

from src.bloore import BloorePoint, positivity_indicator, ppt_indicator, random_interior_points
from src.metric import volume_density_closed, volume_density_numeric
from src.quadrature import IntegrandSpec, SubstitutionKind, integrate_adaptive, integrate_qmc, with_substitutions
from src.schema.report import CheckResult, EngineConfig
from src.schema.scenario import Scenario, parse_scenario
from src.sepfun import (
    dyson_report,
    mu_grid,
    sep_function_closed,
    sep_function_numeric,
)
from src.volumes import (
    reference_for,
    separability_probability,
    separable_volume,
    total_volume,
)

Level = Literal["quick", "full"]

PINNED_BURES_SINGLE = {
    "dev_rc": 0.0678166578822439,
    "dev_rq": 0.1416637904633,
    "dev_cq": 0.0740435736274658,
}

CLOSED_FORM_SCENARIOS = (
    "bures:[(2,3)]:real",
    "bures:[(2,3)]:complex",
    "bures:[(2,3)]:quat",
    "bures:[(1,4),(2,3)]:real",
    "bures:[(1,4),(2,3)]:complex",
    "bures:[(1,4),(2,3)]:quat",
    "bures:[(1,2),(2,3)]:real",
)

FACTORIZABLE_SCENARIOS = (
    "hs:[(2,3)]:real",
    "hs:[(2,3)]:complex",
    "hs:[(2,3)]:quat",
    "hs:[(2,3)]:quat-1",
    "hs:[(1,4),(2,3)]:real",
    "hs:[(1,4),(2,3)]:complex",
    "hs:[(1,4),(2,3)]:quat",
    "bures:[(2,3)]:real",
    "bures:[(2,3)]:complex",
    "bures:[(2,3)]:quat",
    "bures:[(2,3)]:quat-1",
    "bures:[(1,4),(2,3)]:real",
    "bures:[(1,4),(2,3)]:complex",
    "bures:[(1,4),(2,3)]:quat",
)

# relative tolerance per reference scenario
VOLUME_TOLERANCE = {
    "bures:[(2,3)]:real": 1e-4,
    "bures:[(2,3)]:complex": 1e-4,
    "bures:[(2,3)]:quat": 1e-3,
    "bures:[(2,3)]:quat-1": 1e-4,
    "bures:[(1,4),(2,3)]:real": 1e-4,
    "bures:[(1,4),(2,3)]:complex": 1e-3,
    "bures:[(1,4),(2,3)]:quat": 5e-3,
}


@dataclass(frozen=True)
class Check:
    name: str
    level: Level
    run: Callable[[EngineConfig], CheckResult]


def relative_check(name: str, value: float, expected: float, tolerance: float, detail: str = "") -> CheckResult:
    deviation = abs(value - expected) / abs(expected) if expected else abs(value)
    return CheckResult(
        name=name,
        passed=bool(deviation <= tolerance),
        value=value,
        expected=expected,
        deviation=deviation,
        tolerance=tolerance,
        detail=detail,
    )


def bound_check(name: str, value: float, tolerance: float, detail: str = "") -> CheckResult:
    return CheckResult(
        name=name,
        passed=bool(value <= tolerance),
        value=value,
        expected=0.0,
        deviation=value,
        tolerance=tolerance,
        detail=detail,
    )


def _density_check(label: str, n_points: int, seed: int) -> Callable[[EngineConfig], CheckResult]:
    def run(config: EngineConfig) -> CheckResult:
        s = parse_scenario(label)
        worst = 0.0
        for p in random_interior_points(s, n_points, seed=seed):
            closed = volume_density_closed(p, s)
            numeric = volume_density_numeric(p, s)
            worst = max(worst, abs(numeric - closed) / closed)
        return bound_check(f"density:{label}", worst, 1e-6, f"{n_points} points")

    return run


def _sample_point(s: Scenario, rng: np.random.Generator) -> BloorePoint:
    diag = rng.dirichlet(np.ones(4))
    coords = tuple(tuple(float(c) for c in rng.uniform(-1.2, 1.2, s.components)) for _ in s.entries)
    return BloorePoint(float(diag[0]), float(diag[1]), float(diag[2]), coords)


def _near_boundary(p: BloorePoint, s: Scenario, layer: float) -> bool:
    norms2 = [sum(c * c for c in entry) for entry in p.coords]
    if s.shape == "chain":
        return abs(sum(norms2) - 1.0) < layer
    mu = math.sqrt(p.rho11 * p.rho44 / (p.rho22 * p.rho33))
    limits = {(2, 3): min(1.0, mu), (1, 4): min(1.0, 1.0 / mu)}
    for entry, n2 in zip(s.entries, norms2):
        if abs(n2 - 1.0) < layer or abs(n2 - limits[entry] ** 2) < layer:
            return True
    return False


def _indicator_check(label: str, n_points: int, seed: int) -> Callable[[EngineConfig], CheckResult]:
    def run(config: EngineConfig) -> CheckResult:
        s = parse_scenario(label)
        rng = np.random.default_rng(seed)
        disagreements = 0
        compared = 0
        for _ in range(n_points):
            p = _sample_point(s, rng)
            if _near_boundary(p, s, 1e-9):
                continue
            compared += 1
            if positivity_indicator(p, s, "closed") != positivity_indicator(p, s, "eigen"):
                disagreements += 1
            elif s.is_factorizable and ppt_indicator(p, s, "closed") != ppt_indicator(p, s, "eigen"):
                disagreements += 1
        return bound_check(f"indicator:{label}", float(disagreements), 0.0, f"{compared} points compared")

    return run


def _quadrature_checks() -> list[Check]:
    def linear(config: EngineConfig) -> CheckResult:
        spec = IntegrandSpec(lower=(0.0,), upper=(1.0,), density=lambda x: 2.0 * x[:, 0])
        result = integrate_adaptive(spec, rel_tol=1e-8)
        return CheckResult(
            name="quadrature:linear",
            passed=abs(result.estimate - 1.0) <= 1e-10,
            value=result.estimate,
            expected=1.0,
            deviation=abs(result.estimate - 1.0),
            tolerance=1e-10,
        )

    def disk(config: EngineConfig) -> CheckResult:
        # polar (r, θ); the arcsine substitution on r absorbs 1/sqrt(1 − r²)
        spec = IntegrandSpec(
            lower=(0.0, 0.0),
            upper=(1.0, 2.0 * math.pi),
            density=lambda x: x[:, 0] / np.sqrt(1.0 - x[:, 0] ** 2),
        )
        spec = with_substitutions(spec, {0: SubstitutionKind.ARCSINE})
        result = integrate_adaptive(spec, rel_tol=1e-7, max_evals=config.max_evals)
        return relative_check("quadrature:disk", result.estimate, 2.0 * math.pi, 1e-6)

    def ball(config: EngineConfig) -> CheckResult:
        spec = IntegrandSpec(
            lower=(-1.0,) * 4,
            upper=(1.0,) * 4,
            density=lambda x: np.ones(x.shape[0]),
            indicator=lambda x: np.sum(x * x, axis=1) <= 1.0,
        )
        result = integrate_qmc(spec, n_points=min(config.qmc_n, 2**20), seed=config.seed, replicates=config.replicates)
        return relative_check("quadrature:qmc-4-ball", result.estimate, math.pi**2 / 2.0, 2e-3)

    return [
        Check("quadrature:linear", "quick", linear),
        Check("quadrature:disk", "quick", disk),
        Check("quadrature:qmc-4-ball", "full", ball),
    ]


def _sepfun_checks() -> list[Check]:
    def arcsine_half(config: EngineConfig) -> CheckResult:
        s = parse_scenario("bures:[(2,3)]:real")
        result = sep_function_numeric(s, 0.5, "adaptive", config.model_copy(update={"rel_tol": 1e-8}))
        return relative_check("sepfun:bures-real-half", result.estimate, math.pi / 3.0, 1e-9)

    def quat_qmc(config: EngineConfig) -> CheckResult:
        s = parse_scenario("bures:[(2,3)]:quat")
        result = sep_function_numeric(s, 0.7, "qmc", config)
        expected = (2.0 * math.pi**2 / 3.0) * (2.0 - (0.49 + 2.0) * math.sqrt(1.0 - 0.49))
        return relative_check("sepfun:bures-quat-qmc", result.estimate, expected, 1e-3)

    def grid_check(label: str) -> Callable[[EngineConfig], CheckResult]:
        def run(config: EngineConfig) -> CheckResult:
            s = parse_scenario(label)
            worst = 0.0
            for mu in mu_grid(25, 2.0):
                closed = float(sep_function_closed(s, mu))
                result = sep_function_numeric(s, float(mu), "adaptive", config)
                allowed = max(1e-6 * abs(closed), 3.0 * result.error_estimate)
                worst = max(worst, abs(result.estimate - closed) / allowed)
            # ratio of the deviation to its allowance, so the bound is 1
            return bound_check(f"sepfun-grid:{label}", worst, 1.0, "25 grid values")

        return run

    checks = [
        Check("sepfun:bures-real-half", "quick", arcsine_half),
        Check("sepfun:bures-quat-qmc", "full", quat_qmc),
    ]
    checks += [Check(f"sepfun-grid:{label}", "full", grid_check(label)) for label in FACTORIZABLE_SCENARIOS]
    return checks


def _dyson_checks() -> list[Check]:
    def hs(family: str) -> Callable[[EngineConfig], CheckResult]:
        def run(config: EngineConfig) -> CheckResult:
            report = dyson_report("hs", family)
            return bound_check(f"dyson:hs-{family}", report.max_deviation, 1e-12)

        return run

    def bures_pinned(config: EngineConfig) -> CheckResult:
        report = dyson_report("bures", "single")
        worst = max(
            abs(getattr(report, f"max_{key}") - value) / value for key, value in PINNED_BURES_SINGLE.items()
        )
        return bound_check("dyson:bures-single-pinned", worst, 1e-9, f"max deviation {report.max_deviation:.6g}")

    def bures_identity(config: EngineConfig) -> CheckResult:
        single = dyson_report("bures", "single")
        two = dyson_report("bures", "two")
        worst = 0.0
        for a, b in zip(single.rows, two.rows):
            if a.mu < 1.0:
                worst = max(
                    worst,
                    abs(a.s_real_norm_pow4 - b.s_real_norm_pow4),
                    abs(a.s_complex_norm_pow2 - b.s_complex_norm_pow2),
                    abs(a.s_quat_norm - b.s_quat_norm),
                )
        symmetric = max(row.sym_dev for row in two.rows)
        return bound_check("dyson:bures-two-vs-single", max(worst, symmetric), 1e-12)

    return [
        Check("dyson:hs-single", "quick", hs("single")),
        Check("dyson:hs-two", "quick", hs("two")),
        Check("dyson:bures-single-pinned", "quick", bures_pinned),
        Check("dyson:bures-two-vs-single", "quick", bures_identity),
    ]


def _volume_checks() -> list[Check]:
    def hs_probability(label: str) -> Callable[[EngineConfig], CheckResult]:
        def run(config: EngineConfig) -> CheckResult:
            s = parse_scenario(label)
            p = separability_probability(separable_volume(s, config), total_volume(s, config))
            return relative_check(f"probability:{label}", p.value, reference_for(s, "probability").value, 1e-5)

        return run

    def reference(label: str, quantity: str) -> Callable[[EngineConfig], CheckResult]:
        def run(config: EngineConfig) -> CheckResult:
            s = parse_scenario(label)
            if quantity == "total":
                value = total_volume(s, config).estimate
            elif quantity == "separable":
                value = separable_volume(s, config).estimate
            else:
                value = separability_probability(separable_volume(s, config), total_volume(s, config)).value
            row = reference_for(s, quantity)
            return relative_check(f"{quantity}:{label}", value, row.value, VOLUME_TOLERANCE[label], row.provenance)

        return run

    def dual_route(label: str) -> Callable[[EngineConfig], CheckResult]:
        def run(config: EngineConfig) -> CheckResult:
            s = parse_scenario(label)
            worst = 0.0
            for compute in (total_volume, separable_volume):
                a = compute(s, config, route="factorized")
                b = compute(s, config, route="direct")
                allowed = max(3.0 * (a.error_estimate + b.error_estimate), 1e-9 * abs(a.estimate))
                worst = max(worst, abs(a.estimate - b.estimate) / allowed)
            return bound_check(f"dual-route:{label}", worst, 1.0, "deviation over three combined errors")

        return run

    checks = [Check(f"probability:{label}", "quick", hs_probability(label)) for label in (
        "hs:[(2,3)]:real",
        "hs:[(2,3)]:complex",
        "hs:[(2,3)]:quat",
    )]
    checks.append(Check("total:bures:[(2,3)]:real", "quick", reference("bures:[(2,3)]:real", "total")))
    for label in VOLUME_TOLERANCE:
        quantities = ("total",) if label.endswith("quat-1") else ("total", "separable", "probability")
        for quantity in quantities:
            name = f"{quantity}:{label}"
            if any(c.name == name for c in checks):
                continue
            checks.append(Check(name, "full", reference(label, quantity)))
    checks += [
        Check(f"dual-route:{label}", "full", dual_route(label))
        for label in FACTORIZABLE_SCENARIOS
    ]
    return checks


def checks(level: Level = "quick", seed: int = 20240601) -> list[Check]:
    """The acceptance suite; `full` includes every quick check."""
    suite: list[Check] = []
    suite += [Check(f"density:{label}", "quick", _density_check(label, 200, seed)) for label in CLOSED_FORM_SCENARIOS]
    suite += [
        Check(f"indicator:{label}", "quick" if level == "quick" else "full",
              _indicator_check(label, 1_000 if level == "quick" else 10_000, seed))
        for label in CLOSED_FORM_SCENARIOS
    ]
    suite += _quadrature_checks()
    suite += _sepfun_checks()
    suite += _dyson_checks()
    suite += _volume_checks()
    if level == "quick":
        suite = [c for c in suite if c.level == "quick"]
    return suite


def run_check(check: Check, config: EngineConfig) -> CheckResult:
    result = check.run(config)
    if result.passed:
        logger.debug("check passed: name={}, deviation={}", result.name, result.deviation)
    else:
        logger.warning(
            "check failed: name={}, value={}, expected={}, deviation={}, tolerance={}",
            result.name,
            result.value,
            result.expected,
            result.deviation,
            result.tolerance,
        )
    return result


__all__ = [
    "Check",
    "checks",
    "run_check",
    "relative_check",
    "bound_check",
    "PINNED_BURES_SINGLE",
    "CLOSED_FORM_SCENARIOS",
    "FACTORIZABLE_SCENARIOS",
]
