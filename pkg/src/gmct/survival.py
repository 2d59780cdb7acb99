"""Cox proportional hazards for a single factor and grand-mean log-hazard contrasts.

The covariates are group indicators (first group is the reference), so the
Breslow partial likelihood only needs, for every distinct event time, the
number at risk and the number of events in each group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contrasts import correlation_from_covariance
from .core import ComparisonRow, MctResult, SurvivalSample
from .errors import DivergenceError, NumericError
from .mvt import MvtSpec
from .param import adjusted_pvalue, check_conf, critical_value, interval

MAX_ITER = 100
DIVERGENCE_BOUND = 15.0


@dataclass(frozen=True)
class CoxFit:
    beta: np.ndarray
    covariance: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    score_norm: float
    labels: tuple[str, ...]
    ties: str = "breslow"


def risk_tables(sample: SurvivalSample):
    """Per distinct event time: at-risk counts (T, k) and event counts (T, k)."""
    g = sample.group_index()
    k = sample.k
    t = sample.time
    ev = sample.event
    event_times = np.unique(t[ev])
    at_risk = np.empty((event_times.size, k))
    deaths = np.empty((event_times.size, k))
    for j in range(k):
        tj = np.sort(t[g == j])
        at_risk[:, j] = tj.size - np.searchsorted(tj, event_times, side="left")
        dj = np.sort(t[(g == j) & ev])
        deaths[:, j] = np.searchsorted(dj, event_times, side="right") - np.searchsorted(dj, event_times, side="left")
    return at_risk, deaths


def partial_loglik(beta, at_risk, deaths, derivatives=False):
    """Breslow log partial likelihood; optionally its gradient and Hessian in ``beta``."""
    lam = np.concatenate(([0.0], np.asarray(beta, float)))
    shift = lam.max()
    w = at_risk * np.exp(lam - shift)  # (T, k)
    denom = w.sum(axis=1)
    d_tot = deaths.sum(axis=1)
    ll = float(np.sum(deaths @ lam) - np.sum(d_tot * (np.log(denom) + shift)))
    if not derivatives:
        return ll
    frac = (w / denom[:, None])[:, 1:]  # (T, k-1)
    grad = deaths[:, 1:].sum(axis=0) - d_tot @ frac
    info = np.diag(d_tot @ frac) - (frac * d_tot[:, None]).T @ frac
    return ll, grad, -info


def cox_fit(sample: SurvivalSample, tol_loglik: float = 1e-9, tol_score: float = 1e-8) -> CoxFit:
    """Newton-Raphson with step-halving on the Breslow partial likelihood."""
    at_risk, deaths = risk_tables(sample)
    p = sample.k - 1
    beta = np.zeros(p)
    ll, grad, hess = partial_loglik(beta, at_risk, deaths, True)
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        try:
            step = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError as exc:
            raise NumericError("singular information matrix in Cox fit") from exc
        new = beta + step
        new_ll = partial_loglik(new, at_risk, deaths)
        halvings = 0
        while new_ll < ll - 1e-12 * abs(ll) and halvings < 30:
            step *= 0.5
            new = beta + step
            new_ll = partial_loglik(new, at_risk, deaths)
            halvings += 1
        old_ll = ll
        beta = new
        ll, grad, hess = partial_loglik(beta, at_risk, deaths, True)
        big = np.flatnonzero(np.abs(beta) > DIVERGENCE_BOUND)
        if big.size:
            lab = sample.labels[big[0] + 1]
            raise DivergenceError(f"monotone likelihood: coefficient of group {lab!r} diverges", lab)
        rel = abs(ll - old_ll) / max(abs(ll), 1e-300)
        if rel < tol_loglik and np.linalg.norm(grad) < tol_score:
            converged = True
            break
    info = -hess
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise NumericError("singular information matrix in Cox fit") from exc
    if np.any(np.linalg.eigvalsh(info) <= 0):
        raise NumericError("information matrix is not positive definite at the Cox estimate")
    return CoxFit(beta, 0.5 * (cov + cov.T), ll, it, converged, float(np.linalg.norm(grad)), sample.labels)


def mct_hazard(sample: SurvivalSample, conf: float = 0.95, seed: int = 0) -> MctResult:
    """Log hazard of each group minus the average log hazard over groups."""
    check_conf(conf)
    fit = cox_fit(sample)
    k = sample.k
    lam = np.concatenate(([0.0], fit.beta))
    sigma = np.zeros((k, k))
    sigma[1:, 1:] = fit.covariance
    C = np.eye(k) - 1.0 / k
    est = C @ lam
    cov = C @ sigma @ C.T
    se = np.sqrt(np.diag(cov))
    stat = est / se
    spec = MvtSpec(correlation_from_covariance(cov), math.inf)
    crit = critical_value(spec, conf, "two-sided", seed)
    lower, upper = interval(est, se, crit, "two-sided")
    p_adj = [adjusted_pvalue(t, spec, "two-sided", seed) for t in stat]
    rows = tuple(
        ComparisonRow(lab, float(e), float(s), math.inf, float(t), float(lo), float(up), p, "log-hazard",
                      extra={"hazard_ratio_to_om": math.exp(e)})
        for lab, e, s, t, lo, up, p in zip(sample.labels, est, se, stat, lower, upper, p_adj)
    )
    meta = {
        "ties": fit.ties,
        "reference_group": sample.labels[0],
        "beta": fit.beta.tolist(),
        "loglik": fit.loglik,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "weighted": False,
    }
    warn = () if fit.converged else ("Cox fit did not meet the convergence criteria",)
    return MctResult(rows, crit, spec.correlation, min(p_adj), conf, "two-sided",
                     "mct-hazard-cox-breslow", "log-hazard", meta, warn)


def kaplan_meier(sample: SurvivalSample) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Product-limit survival curve per group: (event times, survival just after)."""
    g = sample.group_index()
    out = {}
    for j, lab in enumerate(sample.labels):
        t = sample.time[g == j]
        e = sample.event[g == j]
        times = np.unique(t[e])
        surv = []
        s = 1.0
        for u in times:
            n_risk = np.sum(t >= u)
            d = np.sum((t == u) & e)
            s *= 1.0 - d / n_risk
            surv.append(s)
        out[lab] = (times, np.array(surv))
    return out
