"""Shared data model: validated inputs and the uniform result record."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError

SCALES = (
    "difference",
    "log-ratio",
    "ratio",
    "relative-effect",
    "log-odds",
    "risk-difference",
    "log-risk-ratio",
    "log-hazard",
)
ALTERNATIVES = ("two-sided", "less", "greater")

# null value of each effect scale, used for direction classification and plots
NULL_VALUE = {
    "difference": 0.0,
    "log-ratio": 0.0,
    "ratio": 1.0,
    "relative-effect": 0.5,
    "log-odds": 0.0,
    "risk-difference": 0.0,
    "log-risk-ratio": 0.0,
    "log-hazard": 0.0,
}


def _check_labels(labels):
    if any(not isinstance(lab, str) or not lab for lab in labels):
        raise ValidationError("group labels must be non-empty strings")
    if len(set(labels)) != len(labels):
        raise ValidationError(f"group labels must be unique, got {list(labels)}")


@dataclass(frozen=True)
class GroupedSample:
    """Observations of a one-way layout, one entry per group, in input order.

    Each group needs at least two finite observations so that a within-group
    variance exists.
    """

    labels: tuple[str, ...]
    observations: tuple[np.ndarray, ...]

    def __init__(self, groups: Mapping[str, Sequence[float]] | Sequence[tuple[str, Sequence[float]]]):
        items = list(groups.items()) if isinstance(groups, Mapping) else list(groups)
        if len(items) < 2:
            raise ValidationError(f"need at least 2 groups, got {len(items)}")
        labels = tuple(lab for lab, _ in items)
        _check_labels(labels)
        obs = []
        for lab, values in items:
            arr = np.array(values, dtype=float)
            if arr.ndim != 1:
                raise ValidationError(f"group {lab!r}: observations must be one-dimensional")
            if arr.size < 2:
                raise ValidationError(f"group {lab!r} has n={arr.size}; every group needs n >= 2")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"group {lab!r} contains non-finite observations")
            arr.flags.writeable = False
            obs.append(arr)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "observations", tuple(obs))

    @property
    def k(self) -> int:
        return len(self.labels)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([x.size for x in self.observations])

    def map(self, fn) -> "GroupedSample":
        """Apply ``fn`` to every group's observations, keeping labels."""
        return GroupedSample([(lab, fn(x)) for lab, x in zip(self.labels, self.observations)])


@dataclass(frozen=True)
class GroupSummary:
    label: str
    n: int
    mean: float
    sd: float
    quantile_cache: dict = field(default_factory=dict, compare=False)


def summarize(sample: GroupedSample) -> list[GroupSummary]:
    """Per-group size, mean and sample standard deviation (divisor n - 1)."""
    out = []
    for lab, x in zip(sample.labels, sample.observations):
        mean = float(np.mean(x))
        # two-pass: centre first, then sum squares
        sd = math.sqrt(float(np.sum((x - mean) ** 2)) / (x.size - 1))
        out.append(GroupSummary(lab, int(x.size), mean, sd))
    return out


@dataclass(frozen=True)
class CountTable2xK:
    """k rows of (label, events, trials)."""

    labels: tuple[str, ...]
    events: np.ndarray
    trials: np.ndarray

    def __init__(self, rows: Sequence[tuple[str, int, int]]):
        rows = list(rows)
        if len(rows) < 2:
            raise ValidationError(f"need at least 2 rows, got {len(rows)}")
        labels = tuple(r[0] for r in rows)
        _check_labels(labels)
        events = np.array([r[1] for r in rows])
        trials = np.array([r[2] for r in rows])
        for lab, x, n in zip(labels, events, trials):
            if x != int(x) or n != int(n):
                raise ValidationError(f"row {lab!r}: counts must be integers")
            if n < 1:
                raise ValidationError(f"row {lab!r}: trials must be >= 1, got {n}")
            if not 0 <= x <= n:
                raise ValidationError(f"row {lab!r}: need 0 <= events <= trials, got {x}/{n}")
        events = events.astype(int)
        trials = trials.astype(int)
        events.flags.writeable = False
        trials.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "trials", trials)

    @property
    def k(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class SurvivalSample:
    """Right-censored survival records; ``event`` is True for an observed death."""

    time: np.ndarray
    event: np.ndarray
    group: tuple[str, ...]
    labels: tuple[str, ...]

    def __init__(self, time, event, group, labels=None):
        t = np.array(time, dtype=float)
        e = np.array(event, dtype=bool)
        g = tuple(str(v) for v in group)
        if not (t.ndim == 1 and t.size == e.size == len(g)):
            raise ValidationError("time, event and group must have equal length")
        if not np.all(np.isfinite(t)) or np.any(t <= 0):
            raise ValidationError("survival times must be finite and > 0")
        if not e.any():
            raise ValidationError("at least one event is required")
        if labels is None:
            labels = tuple(dict.fromkeys(g))
        labels = tuple(labels)
        _check_labels(labels)
        missing = set(g) - set(labels)
        if missing:
            raise ValidationError(f"records refer to unknown groups {sorted(missing)}")
        if len(labels) < 2:
            raise ValidationError("need at least 2 groups")
        present = set(g)
        empty = [lab for lab in labels if lab not in present]
        if empty:
            raise ValidationError(f"groups without records: {empty}")
        t.flags.writeable = False
        e.flags.writeable = False
        object.__setattr__(self, "time", t)
        object.__setattr__(self, "event", e)
        object.__setattr__(self, "group", g)
        object.__setattr__(self, "labels", labels)

    @property
    def k(self) -> int:
        return len(self.labels)

    def group_index(self) -> np.ndarray:
        pos = {lab: i for i, lab in enumerate(self.labels)}
        return np.array([pos[v] for v in self.group], dtype=int)


@dataclass(frozen=True)
class ComparisonRow:
    """One comparison against the overall mean.

    ``shape`` is only meaningful for Fieller-type ratio intervals; for
    ``exclusive-complement`` the confidence set is the real line minus
    ``(lower, upper)``.
    """

    label: str
    estimate: float
    se: float
    df: float
    statistic: float
    lower: float
    upper: float
    p_adjusted: float
    scale: str
    shape: str = "bounded"
    flags: tuple[str, ...] = ()
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.scale not in SCALES:
            raise ValueError(f"unknown scale {self.scale!r}")
        if not 0.0 <= self.p_adjusted <= 1.0:
            raise ValueError(f"p_adjusted out of [0, 1]: {self.p_adjusted}")


@dataclass(frozen=True)
class MctResult:
    rows: tuple[ComparisonRow, ...]
    critical_value: float
    correlation: np.ndarray
    global_p: float
    conf_level: float
    alternative: str
    method: str
    scale: str
    metadata: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.alternative not in ALTERNATIVES:
            raise ValueError(f"unknown alternative {self.alternative!r}")

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.rows]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)
