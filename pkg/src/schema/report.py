from __future__ import annotations

from importlib import metadata
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

Engine = Literal["adaptive", "qmc"]
Route = Literal["factorized", "direct"]
Quantity = Literal["total", "separable", "probability"]
Provenance = Literal["published", "derived"]


def tool_version() -> str:
    try:
        return metadata.version("bures-separability")
    except metadata.PackageNotFoundError:
        return "0.1.0"


class EngineConfig(BaseModel):
    """Integration budgets shared by every command; serialized into each report."""

    model_config = ConfigDict(frozen=True)

    rel_tol: float = 1e-6
    max_evals: int = 50_000_000
    qmc_n: int = 2**22
    replicates: int = 8
    seed: int = 20240601


class IntegrationResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    estimate: float
    error_estimate: float = Field(ge=0.0)
    evaluations: int = 0
    engine: Engine
    seed: Optional[int] = None
    converged: bool = True
    replicates: Optional[int] = None

    @property
    def relative_error(self) -> float:
        return self.error_estimate / abs(self.estimate) if self.estimate else float("inf")

    def scaled(self, factor: float) -> IntegrationResult:
        return self.model_copy(
            update={"estimate": self.estimate * factor, "error_estimate": self.error_estimate * abs(factor)}
        )

    @classmethod
    def combine(cls, parts: list[IntegrationResult]) -> IntegrationResult:
        """Sum of independent integrals over disjoint pieces; errors add linearly."""
        first = parts[0]
        return cls(
            estimate=sum(p.estimate for p in parts),
            error_estimate=sum(p.error_estimate for p in parts),
            evaluations=sum(p.evaluations for p in parts),
            engine=first.engine,
            seed=first.seed,
            converged=all(p.converged for p in parts),
            replicates=first.replicates,
        )


class ReferenceRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    scenario: str
    quantity: Quantity
    value: float
    expression: Optional[str] = None
    provenance: Provenance = "published"


class VolumeReport(BaseModel):
    scenario: str
    metric: str
    method: Route
    total: float
    total_err: float
    separable: Optional[float] = None
    separable_err: Optional[float] = None
    probability: Optional[float] = None
    probability_err: Optional[float] = None
    reference: Optional[float] = None
    rel_dev_from_reference: Optional[float] = None
    converged: bool = True
    evaluations: int = 0
    engine_config: EngineConfig = Field(default_factory=EngineConfig)
    seed: Optional[int] = None
    version: str = Field(default_factory=tool_version)


class DysonRow(BaseModel):
    mu: float
    s_real_norm_pow4: float
    s_complex_norm_pow2: float
    s_quat_norm: float
    dev_rc: float
    dev_rq: float
    dev_cq: float
    sym_dev: Optional[float] = None


class DysonReport(BaseModel):
    metric: str
    family: Literal["single", "two"]
    rows: list[DysonRow]
    max_dev_rc: float
    max_dev_rq: float
    max_dev_cq: float
    threshold: float
    exact: bool
    version: str = Field(default_factory=tool_version)

    @property
    def max_deviation(self) -> float:
        return max(self.max_dev_rc, self.max_dev_rq, self.max_dev_cq)


class SepfunRow(BaseModel):
    scenario: str
    mu: float
    s_closed: float
    s_numeric: float
    error_estimate: float
    deviation: float


class CatalogEntry(BaseModel):
    scenario: str
    metric: str
    algebra: str
    entries: str
    dimension: int
    factorizable: bool
    closed_form_density: bool
    separability_function: bool
    separable_volume: bool


class CheckResult(BaseModel):
    name: str
    passed: bool
    value: float
    expected: float
    deviation: float
    tolerance: float
    detail: str = ""


class RunConfig(BaseModel):
    """Everything that determines a command's output; unspecified fields take the defaults."""

    command: Literal["list", "sepfun", "volumes", "figures", "verify", "reference"]
    scenarios: list[str] = Field(default_factory=list)
    metric: Optional[Literal["hs", "bures"]] = None
    all: bool = False
    route: Route = "factorized"
    engine: Literal["auto", "adaptive", "qmc"] = "auto"
    family: Literal["single", "two"] = "single"
    level: Literal["quick", "full"] = "quick"
    grid: int = 201
    mu_max: float = 2.0
    allow_unconverged: bool = False
    format: Literal["table", "csv", "json"] = "table"
    out: Optional[str] = None
    engine_config: EngineConfig = Field(default_factory=EngineConfig)


class RunOutput(BaseModel):
    """Machine report of one command: the run configuration, the records and a summary."""

    version: str = Field(default_factory=tool_version)
    run_config: RunConfig
    records: list[dict[str, Any]]
    summary: dict[str, Any] = Field(default_factory=dict)


__all__ = [
    "EngineConfig",
    "IntegrationResult",
    "ReferenceRow",
    "VolumeReport",
    "DysonRow",
    "DysonReport",
    "SepfunRow",
    "CatalogEntry",
    "CheckResult",
    "RunConfig",
    "RunOutput",
    "tool_version",
]
