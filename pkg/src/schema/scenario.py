from __future__ import annotations

import re
from typing import Literal, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

Metric = Literal["hs", "bures"]
Algebra = Literal["real", "complex", "quat"]
Entry = Tuple[int, int]

ALLOWED_ENTRIES: tuple[Entry, ...] = ((1, 2), (1, 4), (2, 3))
BETA: dict[str, int] = {"real": 1, "complex": 2, "quat": 4}
# Quaternion components in storage order; a zeroed scenario drops them from the end.
COMPONENT_NAMES: tuple[str, ...] = ("x", "y", "u", "v")

SINGLE_ENTRY: tuple[Entry, ...] = ((2, 3),)
TWO_ENTRY: tuple[Entry, ...] = ((1, 4), (2, 3))
CHAIN_ENTRY: tuple[Entry, ...] = ((1, 2), (2, 3))

_SCENARIO_RE = re.compile(r"^\s*(?P<metric>[a-z]+)\s*:\s*\[(?P<entries>[^\]]*)\]\s*(?::\s*(?P<algebra>[a-z0-9\-]+))?\s*$")
_ENTRY_RE = re.compile(r"([~^]?)\(\s*(\d)\s*,\s*(\d)\s*\)")
_MARKER_ALGEBRA = {"": "real", "~": "complex", "^": "quat"}


class Scenario(BaseModel):
    """
    Which off-diagonal entries of the 4×4 density matrix are free, over which algebra,
    and under which metric.
    """

    model_config = ConfigDict(frozen=True)

    metric: Metric
    entries: tuple[Entry, ...]
    algebra: Algebra = "real"
    zeroed: int = 0

    @field_validator("entries", mode="before")
    @classmethod
    def _sort_entries(cls, value):
        entries = tuple(sorted(tuple(int(i) for i in e) for e in value))
        if not entries:
            raise ValueError("scenario needs at least one free entry")
        if len(set(entries)) != len(entries):
            raise ValueError(f"duplicate entries in {entries}")
        for e in entries:
            if e not in ALLOWED_ENTRIES:
                raise ValueError(f"entry {e} is not one of {ALLOWED_ENTRIES}")
        return entries

    @model_validator(mode="after")
    def _check_zeroed(self) -> Scenario:
        if self.zeroed not in (0, 1):
            raise ValueError(f"zeroed must be 0 or 1, got {self.zeroed}")
        if self.zeroed and self.algebra != "quat":
            raise ValueError("zeroed components are only defined for quaternionic entries")
        return self

    @property
    def beta(self) -> int:
        return BETA[self.algebra]

    @property
    def components(self) -> int:
        """Real parameters per free entry."""
        return self.beta - self.zeroed

    @property
    def component_names(self) -> tuple[str, ...]:
        return COMPONENT_NAMES[: self.components]

    @property
    def dimension(self) -> int:
        return 3 + len(self.entries) * self.components

    @property
    def coordinate_labels(self) -> tuple[str, ...]:
        labels = ["rho11", "rho22", "rho33"]
        for i, j in self.entries:
            labels.extend(f"{c}{i}{j}" for c in self.component_names)
        return tuple(labels)

    @property
    def algebra_label(self) -> str:
        return f"{self.algebra}-{self.zeroed}" if self.zeroed else self.algebra

    @property
    def shape(self) -> str:
        if self.entries == SINGLE_ENTRY:
            return "single"
        if self.entries == TWO_ENTRY:
            return "two"
        if self.entries == CHAIN_ENTRY:
            return "chain"
        return "other"

    @property
    def is_factorizable(self) -> bool:
        return self.shape in ("single", "two")

    def with_metric(self, metric: Metric) -> Scenario:
        return self.model_copy(update={"metric": metric})

    def with_algebra(self, algebra: Algebra, zeroed: int = 0) -> Scenario:
        return Scenario(metric=self.metric, entries=self.entries, algebra=algebra, zeroed=zeroed)

    def label(self) -> str:
        entries = ",".join(f"({i},{j})" for i, j in self.entries)
        return f"{self.metric}:[{entries}]:{self.algebra_label}"

    def __str__(self) -> str:
        return self.label()

    @classmethod
    def parse(cls, text: str, metric: Metric | None = None) -> Scenario:
        """
        Parse `<metric>:[(i,j),...]:<algebra>`.

        Entries may carry `~` (complex) or `^` (quaternionic) markers, in which case the algebra
        suffix may be omitted. `metric` fills in a missing metric prefix.
        """
        raw = text.strip()
        if metric is not None and not re.match(r"^[a-z]+\s*:", raw):
            raw = f"{metric}:{raw}"
        match = _SCENARIO_RE.match(raw)
        if match is None:
            raise ValueError(f"cannot parse scenario {text!r}")

        found = _ENTRY_RE.findall(match.group("entries"))
        rest = _ENTRY_RE.sub("", match.group("entries")).replace(",", "").strip()
        if not found or rest:
            raise ValueError(f"cannot parse entries of scenario {text!r}")

        markers = {m for m, _, _ in found}
        if len(markers) > 1:
            raise ValueError(f"mixed entry markers in scenario {text!r}")
        marker_algebra = _MARKER_ALGEBRA[markers.pop()]

        suffix = match.group("algebra")
        zeroed = 0
        if suffix is None:
            algebra = marker_algebra
        else:
            algebra, _, tail = suffix.partition("-")
            if tail:
                if not tail.isdigit():
                    raise ValueError(f"bad zeroed-component count in scenario {text!r}")
                zeroed = int(tail)
            if algebra not in BETA:
                raise ValueError(f"unknown algebra {algebra!r} in scenario {text!r}")
            if marker_algebra != "real" and marker_algebra != algebra:
                raise ValueError(f"entry markers disagree with algebra suffix in {text!r}")

        return cls(
            metric=match.group("metric"),
            entries=[(int(i), int(j)) for _, i, j in found],
            algebra=algebra,
            zeroed=zeroed,
        )


def format_scenario(s: Scenario) -> str:
    return s.label()


def parse_scenario(text: str, metric: Metric | None = None) -> Scenario:
    return Scenario.parse(text, metric=metric)


_CATALOG_SHAPES: tuple[tuple[tuple[Entry, ...], Algebra, int], ...] = (
    (SINGLE_ENTRY, "real", 0),
    (SINGLE_ENTRY, "complex", 0),
    (SINGLE_ENTRY, "quat", 0),
    (SINGLE_ENTRY, "quat", 1),
    (TWO_ENTRY, "real", 0),
    (TWO_ENTRY, "complex", 0),
    (TWO_ENTRY, "quat", 0),
    (CHAIN_ENTRY, "real", 0),
)


def catalog(metric: Metric | None = None) -> list[Scenario]:
    metrics: tuple[Metric, ...] = (metric,) if metric else ("hs", "bures")
    return [
        Scenario(metric=m, entries=entries, algebra=algebra, zeroed=zeroed)
        for m in metrics
        for entries, algebra, zeroed in _CATALOG_SHAPES
    ]


def in_catalog(s: Scenario) -> bool:
    return (s.entries, s.algebra, s.zeroed) in _CATALOG_SHAPES


__all__ = [
    "Scenario",
    "Metric",
    "Algebra",
    "Entry",
    "ALLOWED_ENTRIES",
    "SINGLE_ENTRY",
    "TWO_ENTRY",
    "CHAIN_ENTRY",
    "parse_scenario",
    "format_scenario",
    "catalog",
    "in_catalog",
]
