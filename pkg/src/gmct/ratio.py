"""Simultaneous Fieller-type intervals for the ratio of each group mean to the overall mean."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contrasts import correlation_from_covariance, grand_mean_weights, satterthwaite_df
from .core import ComparisonRow, GroupedSample, MctResult, summarize
from .errors import DegenerateError, ValidationError
from .mvt import MvtSpec
from .param import adjusted_pvalue, check_conf, critical_value

SHAPES = ("bounded", "unbounded-above", "unbounded-below", "whole-line", "exclusive-complement")


@dataclass(frozen=True)
class FiellerInterval:
    lower: float
    upper: float
    shape: str

    def contains(self, theta: float) -> bool:
        if self.shape == "whole-line":
            return True
        if self.shape == "exclusive-complement":
            return theta <= self.lower or theta >= self.upper
        return self.lower <= theta <= self.upper


def fieller_interval(num: float, den: float, var_num: float, var_den: float, cov: float,
                     crit: float) -> FiellerInterval:
    """Solve ``{theta : (num - theta*den)^2 <= crit^2 * Var(num - theta*den)}``.

    ``Var(num - theta*den) = var_num - 2 theta cov + theta^2 var_den``.
    """
    c2 = crit * crit
    A = den * den - c2 * var_den
    B = -2.0 * (num * den - c2 * cov)
    C = num * num - c2 * var_num
    if A == 0.0:
        if B == 0.0:
            return FiellerInterval(-math.inf, math.inf, "whole-line")
        root = -C / B
        if B > 0:
            return FiellerInterval(-math.inf, root, "unbounded-below")
        return FiellerInterval(root, math.inf, "unbounded-above")
    disc = B * B - 4.0 * A * C
    if disc <= 0:
        if A > 0:
            # touches zero at one point only; never happens when the estimate is inside
            root = -B / (2.0 * A)
            return FiellerInterval(root, root, "bounded")
        return FiellerInterval(-math.inf, math.inf, "whole-line")
    sq = math.sqrt(disc)
    q = -0.5 * (B + math.copysign(sq, B))
    r1, r2 = sorted((q / A, C / q))
    if A > 0:
        return FiellerInterval(r1, r2, "bounded")
    return FiellerInterval(r1, r2, "exclusive-complement")


def ratio_statistic(theta, num_vec, den_vec, means, v):
    """T(theta) = (a'X - theta b'X) / sqrt(sum_j (a_j - theta b_j)^2 v_j)."""
    d = np.asarray(num_vec) - theta * np.asarray(den_vec)
    return float(d @ means / math.sqrt(np.sum(d * d * v)))


def fieller_rows(means, v, den_vec, crit):
    """Fieller intervals for ``means[i] / (den_vec @ means)``, one per group."""
    k = means.size
    den = float(den_vec @ means)
    var_den = float(np.sum(den_vec ** 2 * v))
    out = []
    for i in range(k):
        a = np.zeros(k)
        a[i] = 1.0
        out.append(fieller_interval(float(means[i]), den, float(np.sum(a * a * v)), var_den,
                                    float(np.sum(a * den_vec * v)), crit))
    return out


def ratio_contrasts(theta, den_vec):
    """Rows ``e_i - theta_i * b`` defining the linearized ratio statistics."""
    k = den_vec.size
    theta = np.broadcast_to(np.asarray(theta, float), (k,))
    return np.eye(k) - theta[:, None] * den_vec[None, :]


def ratio_spec(theta, den_vec, v, df):
    C = ratio_contrasts(theta, den_vec)
    return MvtSpec(correlation_from_covariance((C * v) @ C.T), df)


def fieller_se(means, v, den_vec, theta):
    """Delta-method standard error of each ratio estimate."""
    C = ratio_contrasts(theta, den_vec)
    return np.sqrt((C ** 2) @ v) / abs(float(den_vec @ means))


def shape_flags(iv: FiellerInterval):
    return () if iv.shape == "bounded" else (f"fieller-{iv.shape}",)


def mct_ratio(sample: GroupedSample, mode: str = "welch", conf: float = 0.95,
              weighted: bool = True, seed: int = 0) -> MctResult:
    """Simultaneous Fieller intervals for mean_i / overall mean.

    The overall mean is ``b'xbar`` with ``b`` the grand-mean weights, so
    group ``i`` sits in both numerator and denominator and the covariance
    between them enters the quadratic. The correlation and Welch df are
    evaluated once at the point estimates. Adjusted p-values test a ratio of 1,
    with correlation and df evaluated at that null.
    """
    if mode not in ("pooled", "welch"):
        raise ValidationError(f"ratio intervals support pooled or welch variance, got {mode!r}")
    check_conf(conf)
    summ = summarize(sample)
    n = np.array([s.n for s in summ], dtype=float)
    means = np.array([s.mean for s in summ])
    s2 = np.array([s.sd for s in summ]) ** 2
    N, k = n.sum(), n.size
    b = grand_mean_weights(n, weighted)
    den = float(b @ means)
    if np.all(means == 0):
        raise DegenerateError("all group means are zero; ratios are undefined")
    if den == 0:
        raise DegenerateError("overall mean is exactly zero; ratios are undefined")

    if mode == "pooled":
        pooled = float(np.sum((n - 1) * s2) / (N - k))
        if pooled <= 0:
            raise DegenerateError("pooled residual variance is zero")
        v = pooled / n
    else:
        v = s2 / n
    theta_hat = means / den

    def joint(theta):
        C = ratio_contrasts(theta, b)
        if mode == "pooled":
            row_df = np.full(k, N - k)
        else:
            row_df = np.array([satterthwaite_df(c, s2, n) for c in C])
        return row_df, MvtSpec(correlation_from_covariance((C * v) @ C.T), float(row_df.min()))

    row_df, spec = joint(theta_hat)
    crit = critical_value(spec, conf, "two-sided", seed)
    intervals = fieller_rows(means, v, b, crit)

    _, null_spec = joint(np.ones(k))
    null_stat = [ratio_statistic(1.0, np.eye(k)[i], b, means, v) for i in range(k)]
    p_adj = [adjusted_pvalue(t, null_spec, "two-sided", seed) for t in null_stat]
    se = fieller_se(means, v, b, theta_hat)

    rows = []
    warn = []
    for i, lab in enumerate(sample.labels):
        iv = intervals[i]
        if iv.shape != "bounded":
            warn.append(f"{lab}: Fieller confidence set is {iv.shape}")
        rows.append(ComparisonRow(lab, float(theta_hat[i]), float(se[i]), float(row_df[i]),
                                  float(null_stat[i]), iv.lower, iv.upper, p_adj[i], "ratio",
                                  iv.shape, shape_flags(iv)))
    meta = {
        "variance": mode,
        "weighted": weighted,
        "om_weights": b.tolist(),
        "joint_df": float(spec.df),
        "correlation_plugin": "point-estimate",
        "pvalue_null_ratio": 1.0,
    }
    return MctResult(tuple(rows), crit, spec.correlation, min(p_adj), conf, "two-sided",
                     f"mct-ratio-fieller-{mode}", "ratio", meta, tuple(warn))
