"""Reference computations written independently of gmct.

Everything here is deliberately naive (explicit loops, exact fractions,
brute force) so that it shares no code path with the library.
"""

import math
from fractions import Fraction

import numpy as np

TOBACCO = [
    # cause, deaths among non-smokers, deaths at 1-14/day
    ("Lung_cancer", 70, 470),
    ("UpperResp_cancer", 0, 130),
    ("Stomach_cancer", 410, 360),
    ("Colon-rectum_cancer", 440, 540),
    ("Prostate_cancer", 550, 260),
    ("Other_cancer", 640, 720),
    ("PulmonaryTB", 0, 160),
    ("ChronicBronchitis", 120, 290),
    ("Other_pulm_diseases", 690, 550),
    ("Coronary_thrombosis", 4220, 4640),
    ("Other_cardiovascular", 2230, 2150),
    ("Cerebral_hemorrhage", 2010, 1940),
    ("Peptic_ulcer", 0, 140),
    ("Violence", 420, 820),
    ("Other_diseases", 1450, 1810),
]

# improvement with / without per arm
LIAROZOLE = [
    ("Dose150", 13, 21),
    ("Dose50", 6, 27),
    ("Dose75", 4, 32),
    ("Placebo", 2, 32),
]


def tobacco_rows():
    """(label, events, trials) with events = deaths at 1-14/day."""
    return [(lab, smoke, none + smoke) for lab, none, smoke in TOBACCO]


def liarozole_rows():
    return [(lab, w, w + wo) for lab, w, wo in LIAROZOLE]


def orthant_bvn(rho):
    """Pr(X1 <= 0, X2 <= 0) for a standard bivariate normal."""
    return 0.25 + math.asin(rho) / (2 * math.pi)


def grand_mean_rows_unweighted(k):
    return [[(1 - Fraction(1, k)) if j == i else -Fraction(1, k) for j in range(k)] for i in range(k)]


def delta_method_table(rows, scale, add):
    """Per-row (estimate, se) for group-vs-average on one proportion scale.

    ``add`` is the pseudo-count added to events and to non-events.
    Estimates are exact fractions on the risk-difference scale.
    """
    k = len(rows)
    eta, var = [], []
    for _, x, n in rows:
        xa = Fraction(x) + Fraction(add)
        na = Fraction(n) + 2 * Fraction(add)
        p = xa / na
        if scale == "risk-difference":
            eta.append(p)
            var.append(p * (1 - p) / na)
        elif scale == "log-odds":
            eta.append(math.log(xa / (na - xa)))
            var.append(1 / xa + 1 / (na - xa))
        else:
            eta.append(math.log(p))
            var.append((1 - p) / (na * p))
    C = grand_mean_rows_unweighted(k)
    out = []
    for row in C:
        est = sum(c * e for c, e in zip(row, eta))
        v = sum(c * c * s for c, s in zip(row, var))
        out.append((est, math.sqrt(v)))
    return out


def relative_effect_enumeration(groups):
    """p_i = (1/k) sum_l Pr(X_l < X_i) + Pr(X_l = X_i)/2, by visiting every pair."""
    k = len(groups)
    out = []
    for xi in groups:
        total = Fraction(0)
        for xl in groups:
            hits = Fraction(0)
            for a in xl:
                for b in xi:
                    if a < b:
                        hits += 1
                    elif a == b:
                        hits += Fraction(1, 2)
            total += hits / (len(xl) * len(xi))
        out.append(total / k)
    return out


def fieller_grid(mean_i, den, var_i, var_den, cov, crit, grid):
    """Boolean mask of grid points theta with |T(theta)| <= crit."""
    num = mean_i - grid * den
    sd = np.sqrt(var_i - 2 * grid * cov + grid * grid * var_den)
    return np.abs(num) <= crit * sd


def max_abs_mc(corr, df, value, draws, seed):
    """Monte Carlo estimate of Pr(max_j |T_j| <= value)."""
    rng = np.random.default_rng(seed)
    vals, vecs = np.linalg.eigh(np.asarray(corr))
    root = vecs * np.sqrt(np.clip(vals, 0, None))
    hits = 0
    chunk = 200_000
    for start in range(0, draws, chunk):
        m = min(chunk, draws - start)
        z = rng.standard_normal((m, len(vals))) @ root.T
        if math.isfinite(df):
            z /= np.sqrt(rng.chisquare(df, m) / df)[:, None]
        hits += int(np.sum(np.max(np.abs(z), axis=1) <= value))
    return hits / draws


def breslow_loglik(beta, time, event, group):
    """Breslow partial log-likelihood by looping over event times."""
    lam = [0.0] + list(beta)
    ll = 0.0
    for t in sorted(set(ti for ti, e in zip(time, event) if e)):
        deaths = [g for ti, e, g in zip(time, event, group) if e and ti == t]
        risk = sum(math.exp(lam[g]) for ti, g in zip(time, group) if ti >= t)
        ll += sum(lam[g] for g in deaths) - len(deaths) * math.log(risk)
    return ll
