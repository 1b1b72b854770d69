from __future__ import annotations

from dataclasses import dataclass, field, replace
import sys
if sys.version_info >= (3, 11):
    from enum import StrEnum
else:
    from enum import Enum

    class StrEnum(str, Enum):
        def __str__(self) -> str:
            return str(self.value)
from functools import lru_cache
import heapq
import itertools
import math
from typing import Callable, Optional
import warnings

import numpy as np
from loguru import logger
from scipy.stats import qmc

from src.schema.report import EngineConfig, IntegrationResult

Density = Callable[[np.ndarray], np.ndarray]
Indicator = Callable[[np.ndarray], np.ndarray]

MIN_REL_TOL = 1e-8
MIN_QMC_POINTS = 2**10
QMC_CHUNK = 2**16
CELL_FLOOR = 1e-6
ADAPTIVE_MAX_DIM = 5


class SubstitutionKind(StrEnum):
    IDENTITY = "identity"
    # x = a + (b − a)·sin t, removes an inverse-square-root edge at x = b
    ARCSINE = "arcsine"
    # x = a + (b − a)·sin²t, removes inverse-square-root edges at both ends
    ARCSINE_BOTH = "arcsine-both"


@dataclass(frozen=True)
class IntegrandSpec:
    """
    A box with a vectorized density (N, d) -> (N,) and an optional indicator (N, d) -> (N,) bool.
    `substitutions` records, per axis, the change of variables already folded into the density.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    density: Density
    indicator: Optional[Indicator] = None
    substitutions: tuple[SubstitutionKind, ...] = field(default=())

    def __post_init__(self) -> None:
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper) or not lower:
            raise ValueError(f"box bounds must have the same positive length, got {lower} and {upper}")
        for a, b in zip(lower, upper):
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise ValueError(f"invalid axis bounds [{a}, {b}]")
        subs = self.substitutions or (SubstitutionKind.IDENTITY,) * len(lower)
        if len(subs) != len(lower):
            raise ValueError(f"expected {len(lower)} substitution tags, got {len(subs)}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "substitutions", tuple(SubstitutionKind(k) for k in subs))

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lower, self.upper))

    def contains(self, x: np.ndarray) -> np.ndarray:
        if self.indicator is None:
            return np.ones(x.shape[0], dtype=bool)
        return np.asarray(self.indicator(x), dtype=bool)

    def evaluate_masked(self, x: np.ndarray) -> tuple[np.ndarray, int, np.ndarray]:
        """Masked density values, the number of non-finite values replaced by zero, and the inside mask."""
        inside = self.contains(x)
        if inside.all():
            with np.errstate(divide="ignore", invalid="ignore"):
                values = np.asarray(self.density(x), dtype=float)
        else:
            values = np.zeros(x.shape[0])
            if inside.any():
                with np.errstate(divide="ignore", invalid="ignore"):
                    values[inside] = self.density(x[inside])
        bad = ~np.isfinite(values)
        n_bad = int(bad.sum())
        if n_bad:
            values = np.where(bad, 0.0, values)
        return values, n_bad, inside

    def evaluate(self, x: np.ndarray) -> tuple[np.ndarray, int]:
        values, n_bad, _ = self.evaluate_masked(x)
        return values, n_bad


def apply_substitution(
    spec: IntegrandSpec,
    axis: int,
    kind: SubstitutionKind | str = SubstitutionKind.ARCSINE,
) -> IntegrandSpec:
    kind = SubstitutionKind(kind)
    if not 0 <= axis < spec.dimension:
        raise ValueError(f"axis {axis} out of range for dimension {spec.dimension}")
    if kind is SubstitutionKind.IDENTITY:
        return spec
    if spec.substitutions[axis] is not SubstitutionKind.IDENTITY:
        raise ValueError(f"axis {axis} already carries substitution {spec.substitutions[axis]}")

    a, b = spec.lower[axis], spec.upper[axis]

    def forward(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.array(t, dtype=float, copy=True)
        col = t[:, axis]
        if kind is SubstitutionKind.ARCSINE:
            x[:, axis] = a + (b - a) * np.sin(col)
            weight = (b - a) * np.cos(col)
        else:
            x[:, axis] = a + (b - a) * np.sin(col) ** 2
            weight = (b - a) * np.sin(2.0 * col)
        return x, weight

    inner_density = spec.density
    inner_indicator = spec.indicator

    def density(t: np.ndarray) -> np.ndarray:
        x, weight = forward(t)
        return inner_density(x) * weight

    indicator = None
    if inner_indicator is not None:

        def indicator(t: np.ndarray) -> np.ndarray:
            return inner_indicator(forward(t)[0])

    lower = list(spec.lower)
    upper = list(spec.upper)
    lower[axis], upper[axis] = 0.0, math.pi / 2.0
    subs = list(spec.substitutions)
    subs[axis] = kind
    return replace(
        spec,
        lower=tuple(lower),
        upper=tuple(upper),
        density=density,
        indicator=indicator,
        substitutions=tuple(subs),
    )


def with_substitutions(spec: IntegrandSpec, kinds: dict[int, SubstitutionKind | str]) -> IntegrandSpec:
    for axis, kind in sorted(kinds.items()):
        spec = apply_substitution(spec, axis, kind)
    return spec


@lru_cache(maxsize=None)
def _tensor_rule(dim: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    points = np.array(list(itertools.product(nodes, repeat=dim)))
    w = np.array([math.prod(c) for c in itertools.product(weights, repeat=dim)])
    return points, w


@lru_cache(maxsize=None)
def _probe_points(dim: int) -> np.ndarray:
    corners = np.array(list(itertools.product((0.0, 1.0), repeat=dim)))
    return np.vstack([corners, np.full((1, dim), 0.5)])


_W4 = 0.5 * np.polynomial.legendre.leggauss(4)[1]


@dataclass
class _Cell:
    lower: np.ndarray
    width: np.ndarray
    estimate: float
    error: float
    mixed: bool
    inside_fraction: float
    split_axis: int


class _AdaptiveRun:
    def __init__(self, spec: IntegrandSpec) -> None:
        self.spec = spec
        self.box_lower = np.array(spec.lower)
        self.box_width = np.array(spec.upper) - self.box_lower
        self.dim = spec.dimension
        self.rule4 = _tensor_rule(self.dim, 4)
        self.rule3 = _tensor_rule(self.dim, 3)
        self.evaluations = 0
        self.non_finite = 0
        # largest finite |density| seen so far; error scale for cut cells with no usable sample
        self.peak = 0.0

    def _values(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        values, n_bad, inside = self.spec.evaluate_masked(x)
        self.evaluations += x.shape[0]
        self.non_finite += n_bad
        if values.size:
            self.peak = max(self.peak, float(np.max(np.abs(values))))
        return values, inside

    def _cut_scale(self, probes: np.ndarray, f4: np.ndarray, f3: np.ndarray) -> float:
        """Typical |density| on a cell the indicator cuts, never zero."""
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = np.abs(np.asarray(self.spec.density(probes), dtype=float))
        self.evaluations += probes.shape[0]
        samples = np.concatenate([raw[np.isfinite(raw) & (raw > 0.0)], np.abs(f4[f4 != 0.0]), np.abs(f3[f3 != 0.0])])
        if samples.size:
            return float(samples.mean())
        return self.peak if self.peak > 0.0 else 1.0

    def evaluate(self, lower: np.ndarray, width: np.ndarray) -> _Cell:
        volume = float(np.prod(width))
        p4, w4 = self.rule4
        p3, w3 = self.rule3
        f4, in4 = self._values(lower + width * p4)
        f3, in3 = self._values(lower + width * p3)
        q4 = volume * float(w4 @ f4)
        q3 = volume * float(w3 @ f3)
        error = abs(q4 - q3)

        mixed = False
        fraction = 1.0
        if self.spec.indicator is not None:
            probes = lower + width * _probe_points(self.dim)
            in_probes = self.spec.contains(probes)
            self.evaluations += probes.shape[0]
            # vertices, centre and every rule node vote on the inside fraction
            votes = np.concatenate([in_probes, in4, in3])
            fraction = float(votes.mean())
            mixed = 0.0 < fraction < 1.0
            if mixed:
                scale = self._cut_scale(probes, f4, f3)
                error = max(error, volume * scale * min(fraction, 1.0 - fraction))

        rel_width = width / self.box_width
        if mixed:
            axis = int(np.argmax(rel_width))
        else:
            axis = self._roughest_axis(f4, rel_width)
        return _Cell(lower, width, q4, error, mixed, fraction, axis)

    def _roughest_axis(self, f4: np.ndarray, rel_width: np.ndarray) -> int:
        grid = f4.reshape((4,) * self.dim)
        scores = np.empty(self.dim)
        for axis in range(self.dim):
            marginal = grid
            for other in reversed(range(self.dim)):
                if other != axis:
                    marginal = np.tensordot(marginal, _W4, axes=([other], [0]))
            g = np.ravel(marginal)
            scores[axis] = abs(g[0] - 3.0 * g[1] + 3.0 * g[2] - g[3])
        top = scores.max()
        if top <= 0.0:
            return int(np.argmax(rel_width))
        candidates = np.flatnonzero(scores >= 0.5 * top)
        return int(candidates[np.argmax(rel_width[candidates])])

    def floor_value(self, cell: _Cell) -> float:
        centre = (cell.lower + 0.5 * cell.width)[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            value = float(np.asarray(self.spec.density(centre), dtype=float)[0])
        self.evaluations += 1
        if not math.isfinite(value):
            return cell.estimate
        return cell.inside_fraction * value * float(np.prod(cell.width))


def integrate_adaptive(
    spec: IntegrandSpec,
    rel_tol: float = 1e-6,
    max_evals: int = 50_000_000,
    abs_tol: float = 0.0,
) -> IntegrationResult:
    """
    Globally adaptive tensor Gauss-Legendre cubature: a 4-point rule per axis with the 3-point rule
    as error estimate. Cells the indicator cuts (vertices, centre and rule nodes disagree) carry an
    error of at least volume·|density|·min(p, 1 − p) and are bisected along their widest axis ahead
    of the others until each is below its share of the target; the rest go largest error first,
    split along the roughest axis. Deterministic for fixed inputs.
    """
    if rel_tol < MIN_REL_TOL:
        raise ValueError(f"rel_tol must be >= {MIN_REL_TOL}, got {rel_tol}")
    if spec.dimension > ADAPTIVE_MAX_DIM:
        logger.warning("adaptive cubature in {} dimensions: cost grows as 4^d per cell", spec.dimension)

    run = _AdaptiveRun(spec)
    counter = itertools.count()
    # cells the indicator cuts and all others, each ordered by error
    cut: list[tuple[float, int, _Cell]] = []
    smooth: list[tuple[float, int, _Cell]] = []
    settled: list[float] = []

    def push(cell: _Cell) -> None:
        heapq.heappush(cut if cell.mixed else smooth, (-cell.error, next(counter), cell))

    def pop(target: float) -> _Cell:
        # cut cells go first until each is below its share of the error target
        n_cells = len(cut) + len(smooth)
        if cut and (not smooth or -cut[0][0] * n_cells >= target or cut[0][0] <= smooth[0][0]):
            return heapq.heappop(cut)[2]
        return heapq.heappop(smooth)[2]

    def cells() -> list[_Cell]:
        return [c for *_, c in cut] + [c for *_, c in smooth]

    first = run.evaluate(run.box_lower.copy(), run.box_width.copy())
    push(first)
    total, total_err = first.estimate, first.error
    converged = False
    iterations = 0

    while cut or smooth:
        target = max(rel_tol * abs(total), abs_tol)
        if total_err <= target:
            converged = True
            break
        if run.evaluations >= max_evals:
            break
        cell = pop(target)
        total -= cell.estimate
        total_err -= cell.error

        axis = cell.split_axis
        half = cell.width.copy()
        half[axis] *= 0.5
        if cell.mixed and half[axis] < CELL_FLOOR * run.box_width[axis]:
            value = run.floor_value(cell)
            settled.append(value)
            total += value
            continue

        upper_lower = cell.lower.copy()
        upper_lower[axis] += half[axis]
        for child in (run.evaluate(cell.lower, half), run.evaluate(upper_lower, half)):
            push(child)
            total += child.estimate
            total_err += child.error

        iterations += 1
        if iterations % 1024 == 0:
            live = cells()
            total = math.fsum([c.estimate for c in live] + settled)
            total_err = math.fsum(c.error for c in live)

    live = cells()
    estimate = math.fsum([c.estimate for c in live] + settled)
    error = math.fsum(c.error for c in live)
    if not converged and error <= max(rel_tol * abs(estimate), abs_tol):
        converged = True

    if run.non_finite:
        logger.warning("adaptive cubature masked non-finite integrand values: count={}", run.non_finite)
    if not converged:
        logger.warning(
            "adaptive budget exhausted: estimate={}, err={}, evals={}, cells={}",
            estimate,
            error,
            run.evaluations,
            len(live),
        )
    logger.debug(
        "adaptive cubature: dim={}, estimate={}, err={}, evals={}, cells={}",
        spec.dimension,
        estimate,
        error,
        run.evaluations,
        len(live) + len(settled),
    )
    return IntegrationResult(
        estimate=estimate,
        error_estimate=error,
        evaluations=run.evaluations,
        engine="adaptive",
        converged=converged,
    )


def integrate_qmc(
    spec: IntegrandSpec,
    n_points: int = 2**22,
    seed: int = 0,
    replicates: int = 8,
) -> IntegrationResult:
    """
    Randomized quasi-Monte Carlo with independently scrambled Sobol' sequences; the error estimate
    is the standard error over replicates. `n_points` per replicate is rounded up to a power of two.
    """
    if n_points < MIN_QMC_POINTS:
        raise ValueError(f"n_points must be >= {MIN_QMC_POINTS}, got {n_points}")
    if replicates < 2:
        raise ValueError(f"at least two replicates are needed for an error estimate, got {replicates}")
    n = 1 << (int(n_points) - 1).bit_length()
    if n != n_points:
        logger.debug("qmc points rounded up to a power of two: requested={}, used={}", n_points, n)

    lower = np.array(spec.lower)
    width = np.array(spec.upper) - lower
    volume = spec.volume
    estimates: list[float] = []
    non_finite = 0
    for child in np.random.SeedSequence(seed).spawn(replicates):
        sampler = qmc.Sobol(d=spec.dimension, scramble=True, seed=np.random.default_rng(child))
        partial: list[float] = []
        remaining = n
        with warnings.catch_warnings():
            # Chunks are powers of two and so is their total; intermediate totals need not be.
            warnings.simplefilter("ignore", UserWarning)
            while remaining:
                size = min(QMC_CHUNK, remaining)
                values, n_bad = spec.evaluate(lower + width * sampler.random(size))
                non_finite += n_bad
                partial.append(float(np.sum(values)))
                remaining -= size
        estimates.append(volume * math.fsum(partial) / n)

    estimate = math.fsum(estimates) / replicates
    error = float(np.std(estimates, ddof=1)) / math.sqrt(replicates)
    if non_finite:
        logger.warning("qmc masked non-finite integrand values: count={}", non_finite)
    logger.debug(
        "qmc: dim={}, estimate={}, err={}, n={}, replicates={}, seed={}",
        spec.dimension,
        estimate,
        error,
        n,
        replicates,
        seed,
    )
    return IntegrationResult(
        estimate=estimate,
        error_estimate=error,
        evaluations=n * replicates,
        engine="qmc",
        seed=seed,
        replicates=replicates,
    )


def integrate(spec: IntegrandSpec, config: EngineConfig | None = None, engine: str = "auto") -> IntegrationResult:
    """Adaptive cubature up to five dimensions, quasi-Monte Carlo above."""
    config = config or EngineConfig()
    if engine == "auto":
        engine = "adaptive" if spec.dimension <= ADAPTIVE_MAX_DIM else "qmc"
    if engine == "adaptive":
        return integrate_adaptive(spec, rel_tol=config.rel_tol, max_evals=config.max_evals)
    if engine == "qmc":
        return integrate_qmc(spec, n_points=config.qmc_n, seed=config.seed, replicates=config.replicates)
    raise ValueError(f"unknown engine {engine!r}")


__all__ = [
    "SubstitutionKind",
    "IntegrandSpec",
    "apply_substitution",
    "with_substitutions",
    "integrate_adaptive",
    "integrate_qmc",
    "integrate",
]
