"""Multivariate normal and t rectangle probabilities by randomized QMC.

The integrand is the usual sequential-conditioning transformation: the
correlation matrix is Cholesky-factorized with variables reordered so that
the most restrictive ones come first, each coordinate is integrated in closed
form given the earlier ones, and the remaining unit hypercube integral is
estimated with a randomly shifted Kronecker (Richtmyer) lattice rule and the
baker's transform. The t case adds one coordinate for the chi radius.

Singular correlation matrices are legal; grand-mean contrasts always produce
one. A coordinate with zero conditional variance is a linear function of
earlier ones, so its limits are intersected with those of the last variable
it depends on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize, special

from .contrasts import PSD_TOL, clip_to_psd
from .errors import NumericError, ValidationError

N_SHIFTS = 12
MIN_LOG2_POINTS = 10
MAX_LOG2_POINTS = 17
PROB_TOL = 1e-4
QUANTILE_TOL = 1e-3
_PIVOT_EPS = 1e-10


@dataclass(frozen=True)
class MvtSpec:
    """Central multivariate t (``df = inf`` for normal) on a correlation scale."""

    correlation: np.ndarray
    df: float = math.inf
    psd_clip: float = field(default=0.0, compare=False)

    def __post_init__(self):
        r = np.atleast_2d(np.asarray(self.correlation, dtype=float))
        if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] < 1:
            raise ValidationError("correlation must be a square matrix")
        if not np.allclose(r, r.T, atol=1e-12) or not np.allclose(np.diag(r), 1.0, atol=1e-12):
            raise ValidationError("correlation must be symmetric with unit diagonal")
        if np.any(np.abs(r) > 1 + 1e-12):
            raise ValidationError("correlation entries must lie in [-1, 1]")
        if not (self.df > 0):
            raise ValidationError(f"df must be > 0, got {self.df}")
        r, clipped = clip_to_psd(np.clip(r, -1.0, 1.0), PSD_TOL)
        # BLAS results can differ in the last bit with memory alignment; canonicalize
        r = np.round(r, 13)
        r.flags.writeable = False
        object.__setattr__(self, "correlation", r)
        object.__setattr__(self, "psd_clip", max(self.psd_clip, clipped))

    @property
    def dim(self) -> int:
        return self.correlation.shape[0]


@dataclass(frozen=True)
class ProbEstimate:
    value: float
    error_bound: float
    samples_used: int
    converged: bool = True


def _primes(count):
    out, cand = [], 2
    while len(out) < count:
        if all(cand % p for p in out if p * p <= cand):
            out.append(cand)
        cand += 1
    return np.array(out, dtype=float)


def _lattice(n, shift, alpha):
    j = np.arange(1, n + 1, dtype=float)[:, None]
    x = np.mod(j * alpha[None, :] + shift[None, :], 1.0)
    return 1.0 - np.abs(2.0 * x - 1.0)


def _univariate_cdf(x, df):
    if math.isinf(df):
        return special.ndtr(x)
    return special.stdtr(df, x)


def _univariate_ppf(p, df):
    if math.isinf(df):
        return float(special.ndtri(p))
    return float(special.stdtrit(df, p))


class _Integrand:
    """Reordered Cholesky factor plus the sequential-conditioning integrand."""

    def __init__(self, corr, lower, upper, df):
        self.df = df
        self.m = corr.shape[0]
        self.L, self.perm = self._factor(corr, np.asarray(lower, float), np.asarray(upper, float))
        # each row's constraint is folded into the last live column it depends on
        diag = np.diag(self.L)
        self.live = [j for j in range(self.m) if diag[j] > 0]
        owner = {}
        for i in range(self.m):
            nz = np.flatnonzero(np.abs(self.L[i, :i + 1]) > 1e-8)
            if nz.size == 0:
                raise NumericError("correlation matrix has a row with no usable factor")
            owner.setdefault(int(nz[-1]), []).append(i)
        self.rows_of = [owner.get(j, []) for j in self.live]
        self.alpha = np.mod(np.sqrt(_primes(self.m)), 1.0)

    @staticmethod
    def _factor(corr, a, b):
        m = corr.shape[0]
        r = corr.copy()
        a = a.copy()
        b = b.copy()
        perm = np.arange(m)
        L = np.zeros((m, m))
        y = np.zeros(m)
        for i in range(m):
            s = L[i:, :i] @ y[:i]
            v = np.diag(r)[i:] - np.sum(L[i:, :i] ** 2, axis=1)
            live = v > _PIVOT_EPS
            j = i
            if live.any():
                sd = np.sqrt(np.where(live, v, 1.0))
                prob = special.ndtr((b[i:] - s) / sd) - special.ndtr((a[i:] - s) / sd)
                j = i + int(np.argmin(np.where(live, prob, np.inf)))
            if j != i:
                r[[i, j], :] = r[[j, i], :]
                r[:, [i, j]] = r[:, [j, i]]
                L[[i, j], :] = L[[j, i], :]
                a[[i, j]] = a[[j, i]]
                b[[i, j]] = b[[j, i]]
                perm[[i, j]] = perm[[j, i]]
            vi = r[i, i] - L[i, :i] @ L[i, :i]
            if vi > _PIVOT_EPS:
                lii = math.sqrt(vi)
                L[i, i] = lii
                L[i + 1:, i] = (r[i + 1:, i] - L[i + 1:, :i] @ L[i, :i]) / lii
                si = L[i, :i] @ y[:i]
                lo, hi = (a[i] - si) / lii, (b[i] - si) / lii
                p = special.ndtr(hi) - special.ndtr(lo)
                if p > 1e-300:
                    dens = lambda z: 0.0 if math.isinf(z) else math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
                    y[i] = (dens(lo) - dens(hi)) / p
                else:
                    y[i] = lo if math.isfinite(lo) else hi
            # zero conditional variance: column stays zero, the row is folded into an earlier one
        return L, perm

    def values(self, w, lower, upper):
        """Integrand at uniform points ``w`` of shape (npts, m)."""
        L = self.L
        a = np.asarray(lower, float)[self.perm]
        b = np.asarray(upper, float)[self.perm]
        npts = w.shape[0]
        if math.isinf(self.df):
            scale = None
        else:
            u = np.clip(w[:, -1], 1e-15, 1.0 - 1e-15)
            scale = np.sqrt(2.0 * special.gammaincinv(0.5 * self.df, u) / self.df)
        f = np.ones(npts)
        y = np.zeros((npts, self.m))
        n_live = len(self.live)
        for idx, (j, rows) in enumerate(zip(self.live, self.rows_of)):
            lo = np.full(npts, -np.inf)
            hi = np.full(npts, np.inf)
            for i in rows:
                s = y[:, :j] @ L[i, :j] if j else 0.0
                ai = a[i] if scale is None else a[i] * scale
                bi = b[i] if scale is None else b[i] * scale
                lij = L[i, j]
                li, ui = (ai - s) / lij, (bi - s) / lij
                if lij < 0:
                    li, ui = ui, li
                lo = np.maximum(lo, li)
                hi = np.minimum(hi, ui)
            d = special.ndtr(lo)
            e = np.maximum(special.ndtr(hi), d)
            f *= e - d
            if idx < n_live - 1:
                u = np.clip(d + w[:, idx] * (e - d), 1e-16, 1.0 - 1e-16)
                y[:, j] = special.ndtri(u)
        return f

    def estimate(self, lower, upper, shifts, n):
        ests = np.array([self.values(_lattice(n, sh, self.alpha), lower, upper).mean() for sh in shifts])
        err = 3.0 * ests.std(ddof=1) / math.sqrt(len(ests))
        return float(ests.mean()), float(err)


def _shifts(seed, m):
    return np.random.default_rng(seed).random((N_SHIFTS, m))


def _check_limits(spec, lower, upper):
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (spec.dim,))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (spec.dim,))
    if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
        raise ValidationError("integration limits must not be NaN")
    if np.any(lower >= upper):
        raise ValidationError("need lower < upper in every coordinate")
    return lower, upper


def mvt_rectangle(spec: MvtSpec, lower: Sequence[float], upper: Sequence[float],
                  seed: int = 0, tol: float = PROB_TOL) -> ProbEstimate:
    """Pr(lower <= T <= upper) for T ~ central multivariate t (or normal).

    The lattice size doubles from 2**10 to 2**17 points per shift until the
    3-sigma error over the random shifts drops below ``tol``. If it never
    does, the last estimate is returned with ``converged=False``.
    """
    lower, upper = _check_limits(spec, lower, upper)
    if spec.dim == 1:
        p = _univariate_cdf(upper[0], spec.df) - _univariate_cdf(lower[0], spec.df)
        return ProbEstimate(float(p), 0.0, 0)
    integrand = _Integrand(spec.correlation, lower, upper, spec.df)
    shifts = _shifts(seed, spec.dim)
    for log2n in range(MIN_LOG2_POINTS, MAX_LOG2_POINTS + 1):
        n = 2 ** log2n
        value, err = integrand.estimate(lower, upper, shifts, n)
        if err <= tol:
            break
    return ProbEstimate(min(max(value, 0.0), 1.0), err, n * N_SHIFTS, err <= tol)


def _limits(c, dim, tails):
    up = np.full(dim, c)
    lo = -up if tails == "two-sided" else np.full(dim, -np.inf)
    return lo, up


_QUANTILE_CACHE: dict = {}
_QUANTILE_CACHE_MAX = 4096


def clear_quantile_cache():
    """Forget memoized critical values (results never depend on the cache)."""
    _QUANTILE_CACHE.clear()


def equicoordinate_quantile(spec: MvtSpec, conf: float, tails: str = "two-sided",
                            seed: int = 0, tol: float = QUANTILE_TOL) -> float:
    """Common cutoff c with Pr(max_j |T_j| <= c) = conf (or max_j T_j for one-sided).

    The ordering, Cholesky factor, lattice size and random shifts are fixed
    once, so the probability is a smooth function of c and Brent's method
    applies. The univariate quantile and the Bonferroni quantile bracket c.
    """
    if not 0 < conf < 1:
        raise ValidationError(f"conf must lie in (0, 1), got {conf}")
    if tails not in ("two-sided", "one-sided"):
        raise ValidationError(f"tails must be 'two-sided' or 'one-sided', got {tails!r}")
    key = (spec.correlation.tobytes(), spec.dim, float(spec.df), float(conf), tails, seed, float(tol))
    hit = _QUANTILE_CACHE.get(key)
    if hit is not None:
        return hit
    alpha = 1.0 - conf
    m = spec.dim
    side = 2.0 if tails == "two-sided" else 1.0
    lo_c = _univariate_ppf(1.0 - alpha / side, spec.df)
    hi_c = _univariate_ppf(1.0 - alpha / (side * m), spec.df)
    if m == 1:
        _QUANTILE_CACHE[key] = lo_c
        return lo_c

    # the achieved probability must land within 2*tol of conf; a 3-sigma
    # error of tol/4 leaves room for the root-finding error
    ptol = tol / 4.0
    shifts = _shifts(seed, m)
    lo0, up0 = _limits(hi_c, m, tails)
    integrand = _Integrand(spec.correlation, lo0, up0, spec.df)
    for log2n in range(MIN_LOG2_POINTS, MAX_LOG2_POINTS + 1):
        n = 2 ** log2n
        lo_l, up_l = _limits(0.5 * (lo_c + hi_c), m, tails)
        _, err = integrand.estimate(lo_l, up_l, shifts, n)
        if err <= ptol:
            break

    def excess(c):
        lo_l, up_l = _limits(c, m, tails)
        return integrand.estimate(lo_l, up_l, shifts, n)[0] - conf

    f_lo = excess(lo_c)
    if f_lo >= 0:
        # the univariate quantile is a hard lower bound (perfectly dependent rows)
        result = lo_c
    else:
        f_hi = excess(hi_c)
        tries = 0
        while f_hi <= 0:
            tries += 1
            if tries > 5:
                raise NumericError(f"could not bracket the equicoordinate quantile (conf={conf}, dim={m})")
            hi_c *= 1.25
            f_hi = excess(hi_c)
        result = optimize.brentq(excess, lo_c, hi_c, xtol=tol / 10.0, rtol=1e-10)
    result = float(result)
    if len(_QUANTILE_CACHE) >= _QUANTILE_CACHE_MAX:
        _QUANTILE_CACHE.clear()
    _QUANTILE_CACHE[key] = result
    return result


def max_abs_probability(spec: MvtSpec, t: float, alternative: str = "two-sided",
                        seed: int = 0, tol: float = PROB_TOL) -> ProbEstimate:
    """Pr(max_j |T_j| <= |t|) for two-sided, Pr(max_j T_j <= t) for one-sided."""
    m = spec.dim
    if alternative == "two-sided":
        c = abs(t)
        if c == 0:
            return ProbEstimate(0.0, 0.0, 0)
        return mvt_rectangle(spec, np.full(m, -c), np.full(m, c), seed, tol)
    if t == -np.inf:
        return ProbEstimate(0.0, 0.0, 0)
    return mvt_rectangle(spec, np.full(m, -np.inf), np.full(m, t), seed, tol)
