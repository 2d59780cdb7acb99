"""Grand-mean comparisons of proportions on the log-odds, risk-difference and log-risk scales.

With a single factor the binomial model is saturated, so the maximum
likelihood estimate of every group is its own (adjusted) proportion and no
iterative fitting is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contrasts import correlation_of_contrasts, grand_mean_contrasts
from .core import NULL_VALUE, ComparisonRow, CountTable2xK, MctResult
from .errors import DegenerateError, ValidationError
from .mvt import MvtSpec
from .param import adjusted_pvalue, check_conf, critical_value, interval

PROPORTION_SCALES = ("log-odds", "risk-difference", "log-risk-ratio")
ADJUSTMENTS = ("auto", "none", "add-half", "add-one")


@dataclass(frozen=True)
class AdjustedProportions:
    x_adj: np.ndarray
    n_adj: np.ndarray
    p_adj: np.ndarray
    adjustment: str


def adjust_counts(table: CountTable2xK, scale: str, adjustment: str = "auto") -> AdjustedProportions:
    """Pseudo-count adjustment applied uniformly to every row.

    ``auto`` resolves to add-half on the log scales when any cell is zero,
    add-one on the risk-difference scale, and none otherwise.
    """
    if adjustment not in ADJUSTMENTS:
        raise ValidationError(f"adjustment must be one of {ADJUSTMENTS}, got {adjustment!r}")
    x = table.events.astype(float)
    n = table.trials.astype(float)
    if adjustment == "auto":
        if scale == "risk-difference":
            adjustment = "add-one"
        elif np.any(x == 0) or np.any(x == n):
            adjustment = "add-half"
        else:
            adjustment = "none"
    add = {"none": 0.0, "add-half": 0.5, "add-one": 1.0}[adjustment]
    x_adj = x + add
    n_adj = n + 2 * add
    return AdjustedProportions(x_adj, n_adj, x_adj / n_adj, adjustment)


def linear_predictor(adj: AdjustedProportions, scale: str):
    """Per-group estimate on the chosen scale and its large-sample variance."""
    x, n, p = adj.x_adj, adj.n_adj, adj.p_adj
    if scale == "log-odds":
        if np.any(x == 0) or np.any(x == n):
            raise DegenerateError("zero cell on the log-odds scale; use an add-half or add-one adjustment")
        # difference of logs so that swapping the columns negates exactly
        return np.log(x) - np.log(n - x), 1.0 / x + 1.0 / (n - x)
    if scale == "log-risk-ratio":
        if np.any(x == 0):
            raise DegenerateError("zero events on the log-risk scale; use an add-half or add-one adjustment")
        return np.log(p), (1.0 - p) / (n * p)
    if scale == "risk-difference":
        return p.copy(), p * (1.0 - p) / n
    raise ValidationError(f"scale must be one of {PROPORTION_SCALES}, got {scale!r}")


def mct_proportions(table: CountTable2xK, scale: str = "log-odds", conf: float = 0.95,
                    adjustment: str = "auto", weighted: bool = False, seed: int = 0) -> MctResult:
    """Each row's proportion against the overall level, normal approximation.

    The overall level is the plain average of the per-row estimates on the
    chosen scale, or weighted by adjusted trials with ``weighted=True``.
    """
    check_conf(conf)
    if scale not in PROPORTION_SCALES:
        raise ValidationError(f"scale must be one of {PROPORTION_SCALES}, got {scale!r}")
    adj = adjust_counts(table, scale, adjustment)
    eta, var = linear_predictor(adj, scale)
    C = grand_mean_contrasts(adj.n_adj if weighted else np.ones(table.k), weighted, table.labels)
    w = C.weights
    C = C.coefficients
    cvar = (C ** 2) @ var
    if np.any(cvar <= 0):
        raise DegenerateError("a comparison has zero variance (all proportions at 0 or 1 without adjustment)")
    est = C @ eta
    se = np.sqrt(cvar)
    stat = est / se
    spec = MvtSpec(correlation_of_contrasts(C, var), math.inf)
    crit = critical_value(spec, conf, "two-sided", seed)
    lower, upper = interval(est, se, crit, "two-sided")
    p_adj = [adjusted_pvalue(t, spec, "two-sided", seed) for t in stat]
    rows = tuple(
        ComparisonRow(lab, float(e), float(s), math.inf, float(t), float(lo), float(up), p, scale,
                      extra={"proportion": float(pp)})
        for lab, e, s, t, lo, up, p, pp in zip(table.labels, est, se, stat, lower, upper, p_adj, adj.p_adj)
    )
    meta = {
        "adjustment": adj.adjustment,
        "weighted": weighted,
        "om_weights": np.asarray(w).tolist(),
        "group_estimates": eta.tolist(),
        "group_variances": var.tolist(),
        "approximation": "multivariate normal",
    }
    warn = ()
    if adj.adjustment != "none":
        warn = (f"counts adjusted ({adj.adjustment}) before estimation",)
    return MctResult(rows, crit, spec.correlation, min(p_adj), conf, "two-sided",
                     f"mct-proportions-{scale}", scale, meta, warn)


def global_direction_report(result: MctResult) -> list[tuple[str, str]]:
    """Label each comparison above-OM, below-OM or ns from its simultaneous interval."""
    null = NULL_VALUE[result.scale]
    out = []
    for row in result.rows:
        if row.shape in ("whole-line", "exclusive-complement"):
            # a two-piece set has no single direction
            direction = "ns"
        elif row.lower > null:
            direction = "above-OM"
        elif row.upper < null:
            direction = "below-OM"
        else:
            direction = "ns"
        out.append((row.label, direction))
    return out
