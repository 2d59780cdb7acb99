"""Relative effects of each group against the unweighted mixture of all groups.

Estimates come from pseudo-ranks (ranks against the unweighted mixture of
the group distributions, midranks for ties). The covariance of the
estimated effects uses the placement representation

    p_l - p_l* ~ sum_s 1/n_s sum_m (Z_sm - E Z_s),
    Z_lm = G(X_lm) - F_l(X_lm)/k,    Z_sm = -F_l(X_sm)/k  (s != l),

with ``G`` the mixture distribution and all distribution functions taken
as normalized (mid) versions. Each group's placement covariance is
estimated empirically.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import special

from .contrasts import correlation_from_covariance
from .core import ComparisonRow, GroupedSample, MctResult
from .errors import ValidationError
from .mvt import MvtSpec
from .param import adjusted_pvalue, check_conf, critical_value


def pairwise_relative_effect(x, y) -> float:
    """Pr(X < Y) + Pr(X = Y)/2 by counting all cross pairs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0 or y.size == 0:
        raise ValidationError("both samples must be non-empty")
    ys = np.sort(y)
    # pairs with a < b and ties, counted per element of x
    greater = ys.size - np.searchsorted(ys, x, side="right")
    ties = np.searchsorted(ys, x, side="right") - np.searchsorted(ys, x, side="left")
    return float((greater.sum() + 0.5 * ties.sum()) / (x.size * y.size))


def mid_ecdf(reference, points):
    """Normalized empirical distribution function of ``reference`` at ``points``."""
    ref = np.sort(np.asarray(reference, dtype=float))
    left = np.searchsorted(ref, points, side="left")
    right = np.searchsorted(ref, points, side="right")
    return 0.5 * (left + right) / ref.size


def pseudo_ranks(sample: GroupedSample) -> list[np.ndarray]:
    """Pseudo-rank of every observation: ``N * G(x) + 1/2`` with ``G`` the unweighted mixture."""
    N = int(sample.sizes.sum())
    k = sample.k
    out = []
    for x in sample.observations:
        g = sum(mid_ecdf(ref, x) for ref in sample.observations) / k
        out.append(N * g + 0.5)
    return out


def relative_effects(sample: GroupedSample) -> np.ndarray:
    """p_l = integral of G dF_l for every group, from pseudo-ranks."""
    N = int(sample.sizes.sum())
    return np.array([(psi.mean() - 0.5) / N for psi in pseudo_ranks(sample)])


def _placement_covariances(sample: GroupedSample):
    """Per-group covariance of placements, shape (k groups, k effects, k effects)."""
    obs = sample.observations
    k = sample.k
    covs = []
    for s, x in enumerate(obs):
        f = np.array([mid_ecdf(ref, x) for ref in obs])  # (k, n_s): F_l(X_sm)
        z = -f / k
        z[s] += f.mean(axis=0)  # G(X_sm), only for the group's own effect
        covs.append(np.atleast_2d(np.cov(z, ddof=1)))
    return covs


def effect_covariance(sample: GroupedSample):
    """Estimated covariance matrix of the relative effects and per-group pieces."""
    n = sample.sizes
    pieces = _placement_covariances(sample)
    cov = sum(p / n_s for p, n_s in zip(pieces, n))
    return cov, pieces


def _welch_df(pieces, n, l):
    terms = np.array([p[l, l] / n_s for p, n_s in zip(pieces, n)])
    total = terms.sum()
    if total <= 0:
        return math.inf
    denom = np.sum(terms ** 2 / (n - 1))
    return max(1.0, float(total ** 2 / denom)) if denom > 0 else math.inf


def _logit(p):
    return math.log(p / (1.0 - p))


def mct_relative(sample: GroupedSample, conf: float = 0.95, approx: str = "mult-t",
                 transform: str = "logit", seed: int = 0) -> MctResult:
    """Nonparametric grand-mean MCT on relative effects.

    ``approx="mult-normal"`` uses the multivariate normal limit,
    ``"mult-t"`` a multivariate t with the smallest Welch-type df over rows.
    ``transform="logit"`` builds intervals on the log-odds scale and maps the
    limits back into (0, 1); log-odds values are kept in each row's ``extra``.
    """
    check_conf(conf)
    if approx not in ("mult-normal", "mult-t"):
        raise ValidationError(f"approx must be 'mult-normal' or 'mult-t', got {approx!r}")
    if transform not in ("identity", "logit"):
        raise ValidationError(f"transform must be 'identity' or 'logit', got {transform!r}")
    n = sample.sizes
    N = int(n.sum())
    k = sample.k
    warn = []
    if approx == "mult-t" and n.min() < 4:
        msg = "groups with fewer than 4 observations: the t approximation is unreliable"
        warnings.warn(msg, stacklevel=2)
        warn.append(msg)

    p_hat = relative_effects(sample)
    cov, pieces = effect_covariance(sample)
    # nu_l = N * Var(p_hat_l), floored at 1/(4 N^2)
    nu = N * np.diag(cov)
    nu_floor = 1.0 / (4.0 * N * N)
    degenerate = nu < nu_floor
    if degenerate.any():
        nu = np.maximum(nu, nu_floor)
        for lab in np.asarray(sample.labels)[degenerate]:
            warn.append(f"{lab}: placement variance is zero; floored at 1/(4N^2)")
        corr_cov = cov.copy()
        corr_cov[np.diag_indices(k)] = nu / N
    else:
        corr_cov = cov
    se = np.sqrt(nu / N)
    statistic = math.sqrt(N) * (p_hat - 0.5) / np.sqrt(nu)

    if approx == "mult-t":
        row_df = np.array([_welch_df(pieces, n, l) for l in range(k)])
        joint_df = float(row_df.min())
    else:
        row_df = np.full(k, math.inf)
        joint_df = math.inf
    spec = MvtSpec(correlation_from_covariance(corr_cov), joint_df)
    crit = critical_value(spec, conf, "two-sided", seed)
    p_adj = [adjusted_pvalue(t, spec, "two-sided", seed) for t in statistic]

    rows = []
    for l, lab in enumerate(sample.labels):
        flags = ["variance-floored"] if degenerate[l] else []
        extra = {}
        if transform == "logit":
            p = min(max(p_hat[l], 1.0 / (2 * N)), 1.0 - 1.0 / (2 * N))
            if p != p_hat[l]:
                flags.append("estimate-clamped-for-logit")
            eta = _logit(p)
            se_eta = se[l] / (p * (1.0 - p))
            lo_eta, up_eta = eta - crit * se_eta, eta + crit * se_eta
            lower, upper = float(special.expit(lo_eta)), float(special.expit(up_eta))
            extra = {"log_odds": eta, "log_odds_se": float(se_eta), "log_odds_lower": float(lo_eta),
                     "log_odds_upper": float(up_eta)}
        else:
            lower, upper = p_hat[l] - crit * se[l], p_hat[l] + crit * se[l]
            if lower < 0 or upper > 1:
                flags.append("clipped-to-unit-interval")
                lower, upper = max(lower, 0.0), min(upper, 1.0)
        rows.append(ComparisonRow(lab, float(p_hat[l]), float(se[l]), float(row_df[l]),
                                  float(statistic[l]), float(lower), float(upper), p_adj[l],
                                  "relative-effect", flags=tuple(flags), extra=extra))
    meta = {
        "reference": "unweighted mixture (pseudo-ranks)",
        "variance_estimator": "placement covariance",
        "approx": approx,
        "transform": transform,
        "joint_df": joint_df,
        "ties": "midranks",
    }
    return MctResult(tuple(rows), crit, spec.correlation, min(p_adj), conf, "two-sided",
                     f"mct-relative-{approx}-{transform}", "relative-effect", meta, tuple(warn))
