"""Parametric multiple contrast test of each group mean against the overall mean."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .contrasts import correlation_of_contrasts, grand_mean_contrasts, satterthwaite_df
from .core import ALTERNATIVES, ComparisonRow, GroupedSample, MctResult, summarize
from .errors import DegenerateError, ValidationError
from .mvt import MvtSpec, equicoordinate_quantile, max_abs_probability
from .mvt import _univariate_ppf as _univariate_quantile

VARIANCE_MODES = ("pooled", "welch", "sandwich-HC3")
P_FLOOR = np.finfo(float).eps


def check_conf(conf):
    if not 0.5 < conf < 1:
        raise ValidationError(f"confidence level must lie in (0.5, 1), got {conf}")


def check_alternative(alternative):
    if alternative not in ALTERNATIVES:
        raise ValidationError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")


def adjusted_pvalue(t_obs: float, spec: MvtSpec, alternative: str = "two-sided", seed: int = 0) -> float:
    """Single-step adjusted p-value of one statistic under the joint max-T law.

    ``alternative="less"`` expects the statistic oriented as observed; it is
    negated internally so the upper tail is used.
    """
    check_alternative(alternative)
    if alternative == "two-sided":
        if t_obs == 0:
            return 1.0
        prob = max_abs_probability(spec, t_obs, "two-sided", seed).value
    else:
        t = t_obs if alternative == "greater" else -t_obs
        prob = max_abs_probability(spec, t, "one-sided", seed).value
    return float(min(1.0, max(P_FLOOR, 1.0 - prob)))


def exceeds_critical_value(spec: MvtSpec, value: float, conf: float, seed: int = 0) -> bool:
    """Whether ``value`` >= the two-sided equicoordinate quantile, without solving for it.

    The univariate and Bonferroni quantiles bound the cutoff, so only values
    between them need one probability evaluation.
    """
    lo = _univariate_quantile((1.0 + conf) / 2.0, spec.df)
    if value < lo:
        return False
    hi = _univariate_quantile(1.0 - (1.0 - conf) / (2.0 * spec.dim), spec.df)
    if value >= hi:
        return True
    return max_abs_probability(spec, value, "two-sided", seed).value >= conf


def critical_value(spec: MvtSpec, conf: float, alternative: str, seed: int) -> float:
    tails = "two-sided" if alternative == "two-sided" else "one-sided"
    return equicoordinate_quantile(spec, conf, tails, seed)


def interval(estimate, se, crit, alternative):
    """Simultaneous interval for each row given a common critical value."""
    estimate = np.asarray(estimate, float)
    se = np.asarray(se, float)
    half = crit * se
    lower = estimate - half
    upper = estimate + half
    if alternative == "greater":
        upper = np.full_like(upper, np.inf)
    elif alternative == "less":
        lower = np.full_like(lower, -np.inf)
    return lower, upper


@dataclass(frozen=True)
class DifferenceFit:
    """Everything the difference MCT needs except the p-values."""

    labels: tuple
    estimate: np.ndarray
    se: np.ndarray
    row_df: np.ndarray
    statistic: np.ndarray
    spec: MvtSpec
    critical_value: float
    weights: np.ndarray


def fit_difference(sample: GroupedSample, mode: str = "welch", conf: float = 0.95,
                   alternative: str = "two-sided", weighted: bool = True, seed: int = 0,
                   with_critical: bool = True) -> DifferenceFit:
    if mode not in VARIANCE_MODES:
        raise ValidationError(f"variance mode must be one of {VARIANCE_MODES}, got {mode!r}")
    check_conf(conf)
    check_alternative(alternative)
    summ = summarize(sample)
    n = np.array([s.n for s in summ], dtype=float)
    ybar = np.array([s.mean for s in summ])
    s2 = np.array([s.sd for s in summ]) ** 2
    N, k = n.sum(), n.size
    contrasts = grand_mean_contrasts(n.astype(int), weighted, sample.labels)
    C = contrasts.coefficients

    if mode == "pooled":
        pooled = float(np.sum((n - 1) * s2) / (N - k))
        if pooled <= 0:
            raise DegenerateError("pooled residual variance is zero")
        v = pooled / n
        row_df = np.full(k, N - k)
        joint_df = N - k
    elif mode == "welch":
        v = s2 / n
        row_df = np.array([satterthwaite_df(c, s2, n) for c in C])
        # a multivariate t has one df; the smallest row df is conservative
        joint_df = float(row_df.min())
    else:
        # HC3 in the cell-means model: leverage 1/n_i, so each mean gets s_i^2/(n_i - 1)
        v = s2 / (n - 1)
        row_df = np.full(k, N - k)
        joint_df = N - k

    var = (C ** 2) @ v
    if np.any(var <= 0):
        raise DegenerateError("a contrast has zero estimated variance")
    se = np.sqrt(var)
    estimate = C @ ybar
    statistic = estimate / se
    # pooled: the correlation depends on n only, which keeps it cacheable
    spec = MvtSpec(correlation_of_contrasts(C, 1.0 / n if mode == "pooled" else v), joint_df)
    crit = critical_value(spec, conf, alternative, seed) if with_critical else math.nan
    return DifferenceFit(sample.labels, estimate, se, row_df, statistic, spec, crit, contrasts.weights)


def mct_difference(sample: GroupedSample, mode: str = "welch", conf: float = 0.95,
                   alternative: str = "two-sided", weighted: bool = True, seed: int = 0) -> MctResult:
    """Simultaneous intervals and adjusted p-values for group mean minus overall mean.

    Parameters
    ----------
    sample : GroupedSample
    mode : {"pooled", "welch", "sandwich-HC3"}
        ``pooled`` uses the residual variance with N - k df. ``welch`` plugs
        in group variances with per-row Satterthwaite df and uses the
        smallest of them for the joint distribution. ``sandwich-HC3`` uses the
        leverage-corrected robust covariance of the cell means with N - k df.
    conf : float
        Simultaneous confidence level.
    alternative : {"two-sided", "less", "greater"}
    weighted : bool
        Overall mean weighted by group size (default) or the plain average of
        group means.
    seed : int
        Seed of the QMC integration; results are bit-identical per seed.
    """
    fit = fit_difference(sample, mode, conf, alternative, weighted, seed)
    lower, upper = interval(fit.estimate, fit.se, fit.critical_value, alternative)
    p_adj = [adjusted_pvalue(t, fit.spec, alternative, seed) for t in fit.statistic]
    rows = tuple(
        ComparisonRow(lab, float(e), float(s), float(d), float(t), float(lo), float(up), p, "difference")
        for lab, e, s, d, t, lo, up, p in zip(fit.labels, fit.estimate, fit.se, fit.row_df,
                                              fit.statistic, lower, upper, p_adj)
    )
    warn = ()
    if fit.spec.psd_clip > 0:
        warn = (f"correlation matrix clipped to PSD (largest clipped eigenvalue {fit.spec.psd_clip:.3g})",)
    meta = {
        "variance": mode,
        "weighted": weighted,
        "om_weights": fit.weights.tolist(),
        "joint_df": float(fit.spec.df),
        "psd_clip": fit.spec.psd_clip,
    }
    return MctResult(rows, fit.critical_value, fit.spec.correlation, min(p_adj), conf, alternative,
                     f"mct-difference-{mode}", "difference", meta, warn)


def unadjusted_pvalue(t: float, df: float, alternative: str = "two-sided") -> float:
    """Per-comparison p-value ignoring multiplicity (used only as a reference)."""
    if alternative == "less":
        t = -t
    if math.isinf(df):
        upper = special.ndtr(-abs(t) if alternative == "two-sided" else -t)
    else:
        upper = special.stdtr(df, -abs(t) if alternative == "two-sided" else -t)
    return float(min(1.0, 2 * upper if alternative == "two-sided" else upper))
