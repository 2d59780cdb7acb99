"""Simultaneous intervals for group quantiles against the overall quantile level.

The overall reference is the plain average of the group quantiles, so the
grand-mean contrast ``e_i - 1/k`` applies on the quantile scale. Standard
errors of the group quantiles come from a seeded nonparametric bootstrap,
one random stream per group index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contrasts import correlation_of_contrasts, grand_mean_contrasts
from .core import ComparisonRow, GroupedSample, MctResult
from .errors import DegenerateError, ValidationError
from .mvt import MvtSpec
from .param import adjusted_pvalue, check_conf, critical_value, interval
from .ratio import fieller_rows, fieller_se, ratio_contrasts, ratio_statistic, shape_flags

MIN_GROUP_SIZE = 5
DEFAULT_B = 1999


@dataclass(frozen=True)
class QuantileSpec:
    """Probability level of the quantile.

    The sample quantile interpolates linearly between order statistics at
    position ``(n - 1) p`` (0-based), which is numpy's ``"linear"`` rule.
    """

    p: float = 0.5

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValidationError(f"quantile level must lie in (0, 1), got {self.p}")


def group_quantile(observations, spec: QuantileSpec = QuantileSpec()) -> float:
    x = np.asarray(observations, dtype=float)
    if x.size < 2:
        raise ValidationError("need at least 2 observations for a quantile")
    return float(np.quantile(x, spec.p, method="linear"))


def bootstrap_variance(x, spec: QuantileSpec, B: int, seed: int, group_index: int) -> float:
    """Variance of the sample quantile over ``B`` bootstrap resamples.

    The stream depends on ``(seed, group_index)`` only, never on the data,
    so rescaling the data rescales every resample exactly.
    """
    rng = np.random.default_rng([seed, group_index])
    idx = rng.integers(0, x.size, size=(B, x.size))
    q = np.quantile(x[idx], spec.p, axis=1, method="linear")
    return float(np.var(q, ddof=1))


def _resolution(sample):
    pooled = np.unique(np.concatenate(sample.observations))
    gaps = np.diff(pooled)
    gaps = gaps[gaps > 0]
    return float(gaps.min()) if gaps.size else None


def mct_quantile(sample: GroupedSample, spec: QuantileSpec = QuantileSpec(), effect: str = "difference",
                 conf: float = 0.95, B: int = DEFAULT_B, seed: int = 0, dist: str = "mvt") -> MctResult:
    """Quantile difference or ratio of each group to the average group quantile.

    ``effect="ratio"`` inverts the Fieller quadratic with the bootstrap
    variances; ``dist="mvt"`` uses a multivariate t with ``min(n_i) - 1``
    df, ``dist="mvn"`` the normal limit.
    """
    check_conf(conf)
    if effect not in ("difference", "ratio"):
        raise ValidationError(f"effect must be 'difference' or 'ratio', got {effect!r}")
    if dist not in ("mvt", "mvn"):
        raise ValidationError(f"dist must be 'mvt' or 'mvn', got {dist!r}")
    if B < 2:
        raise ValidationError("need at least 2 bootstrap resamples")
    n = sample.sizes
    if n.min() < MIN_GROUP_SIZE:
        raise ValidationError(f"quantile intervals need n_i >= {MIN_GROUP_SIZE} in every group")
    k = sample.k
    q = np.array([group_quantile(x, spec) for x in sample.observations])
    v = np.array([bootstrap_variance(x, spec, B, seed, i) for i, x in enumerate(sample.observations)])
    warn = []
    flags = [() for _ in range(k)]
    if np.any(v <= 0):
        res = _resolution(sample)
        if res is None:
            res = 1.0
            warn.append("all observations are identical; variance floor uses resolution 1")
        for i in np.flatnonzero(v <= 0):
            v[i] = (res / 2.0) ** 2
            flags[i] = ("variance-floored",)
            warn.append(f"{sample.labels[i]}: bootstrap variance is zero; floored at (resolution/2)^2")
    df = float(n.min() - 1) if dist == "mvt" else math.inf
    b = np.full(k, 1.0 / k)
    meta = {
        "quantile_p": spec.p,
        "interpolation": "linear (numpy type 7)",
        "reference": "unweighted mean of group quantiles",
        "variance_estimator": f"nonparametric bootstrap, B={B}, per-group seed streams",
        "dist": dist,
        "joint_df": df,
        "group_quantiles": q.tolist(),
        "bootstrap_variances": v.tolist(),
    }

    if effect == "difference":
        C = grand_mean_contrasts(n, weighted=False, labels=sample.labels).coefficients
        est = C @ q
        se = np.sqrt((C ** 2) @ v)
        stat = est / se
        mspec = MvtSpec(correlation_of_contrasts(C, v), df)
        crit = critical_value(mspec, conf, "two-sided", seed)
        lower, upper = interval(est, se, crit, "two-sided")
        p_adj = [adjusted_pvalue(t, mspec, "two-sided", seed) for t in stat]
        rows = tuple(
            ComparisonRow(lab, float(e), float(s), df, float(t), float(lo), float(up), p, "difference",
                          flags=fl)
            for lab, e, s, t, lo, up, p, fl in zip(sample.labels, est, se, stat, lower, upper, p_adj, flags)
        )
        return MctResult(rows, crit, mspec.correlation, min(p_adj), conf, "two-sided",
                         "mct-quantile-difference", "difference", meta, tuple(warn))

    den = float(b @ q)
    if den == 0:
        raise DegenerateError("average group quantile is zero; ratios are undefined")
    theta = q / den
    C = ratio_contrasts(theta, b)
    mspec = MvtSpec(correlation_of_contrasts(C, v), df)
    crit = critical_value(mspec, conf, "two-sided", seed)
    intervals = fieller_rows(q, v, b, crit)
    C0 = ratio_contrasts(np.ones(k), b)
    null_spec = MvtSpec(correlation_of_contrasts(C0, v), df)
    null_stat = [ratio_statistic(1.0, np.eye(k)[i], b, q, v) for i in range(k)]
    p_adj = [adjusted_pvalue(t, null_spec, "two-sided", seed) for t in null_stat]
    se = fieller_se(q, v, b, theta)
    rows = []
    for i, lab in enumerate(sample.labels):
        iv = intervals[i]
        if iv.shape != "bounded":
            warn.append(f"{lab}: Fieller confidence set is {iv.shape}")
        rows.append(ComparisonRow(lab, float(theta[i]), float(se[i]), df, float(null_stat[i]),
                                  iv.lower, iv.upper, p_adj[i], "ratio", iv.shape,
                                  flags[i] + shape_flags(iv)))
    meta["correlation_plugin"] = "point-estimate"
    return MctResult(tuple(rows), crit, mspec.correlation, min(p_adj), conf, "two-sided",
                     "mct-quantile-ratio-fieller", "ratio", meta, tuple(warn))
