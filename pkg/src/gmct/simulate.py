"""Monte Carlo coverage, size and power of the difference-to-overall-mean MCT.

A plain one-way ANOVA F-test runs on the same datasets as a power
comparator only.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .core import GroupedSample
from .errors import GmctError, ValidationError
from .param import VARIANCE_MODES, exceeds_critical_value, fit_difference

ERRORS = ("normal", "lognormal", "t3")


@dataclass(frozen=True)
class SimDesign:
    n: tuple[int, ...]
    means: tuple[float, ...] | None = None
    sds: tuple[float, ...] | None = None
    error: str = "normal"
    reps: int = 1000
    conf: float = 0.95
    method: str = "pooled"
    weighted: bool = True
    seed: int = 0

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        k = len(n)
        means = tuple(float(v) for v in self.means) if self.means is not None else (0.0,) * k
        sds = tuple(float(v) for v in self.sds) if self.sds is not None else (1.0,) * k
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sds", sds)
        if k < 2:
            raise ValidationError("a design needs at least 2 groups")
        if len(means) != k or len(sds) != k:
            raise ValidationError("means and sds must have one entry per group")
        if min(n) < 2:
            raise ValidationError("group sizes must be >= 2")
        if any(s <= 0 for s in sds):
            raise ValidationError("standard deviations must be > 0")
        if self.reps < 100:
            raise ValidationError("reps must be >= 100")
        if self.error not in ERRORS:
            raise ValidationError(f"error must be one of {ERRORS}, got {self.error!r}")
        if self.method not in VARIANCE_MODES:
            raise ValidationError(f"method must be one of {VARIANCE_MODES}, got {self.method!r}")

    @property
    def k(self) -> int:
        return len(self.n)

    @classmethod
    def balanced(cls, k: int, n: int, sd: float = 1.0, **kw) -> "SimDesign":
        return cls(n=(n,) * k, sds=(sd,) * k, **kw)


@dataclass(frozen=True)
class SimResult:
    coverage: float
    rejection_rate: float
    mc_se: float
    rejection_mc_se: float
    f_rejection_rate: float
    failures: int
    reps: int
    design: dict = field(default_factory=dict)


def _errors(rng, kind, size):
    if kind == "normal":
        return rng.standard_normal(size)
    if kind == "lognormal":
        # standardized to mean 0, variance 1
        e = math.e
        return (np.exp(rng.standard_normal(size)) - math.sqrt(e)) / math.sqrt((e - 1.0) * e)
    return rng.standard_t(3, size) / math.sqrt(3.0)


def f_test_pvalue(groups) -> float:
    """One-way ANOVA F-test p-value (equal-variance)."""
    n = np.array([g.size for g in groups], dtype=float)
    means = np.array([g.mean() for g in groups])
    N, k = n.sum(), n.size
    grand = np.sum(n * means) / N
    between = np.sum(n * (means - grand) ** 2) / (k - 1)
    within = sum(float(np.sum((g - g.mean()) ** 2)) for g in groups) / (N - k)
    return float(special.fdtrc(k - 1, N - k, between / within))


def simulate_coverage(design: SimDesign) -> SimResult:
    """Run the MCT on ``design.reps`` datasets drawn from ``design``.

    Coverage is the fraction of datasets whose simultaneous intervals all
    contain the true differences to the overall mean, i.e. whose largest
    |estimate - truth| / se stays below the critical value. The min-p global
    test rejects exactly when the largest |t| reaches the critical value. Both
    events are decided by comparing one joint probability with ``conf``
    instead of solving for the cutoff. Each replicate draws from its own
    stream ``(seed, rep)``, so replicates are order independent.
    """
    n = np.array(design.n)
    mu = np.array(design.means)
    sd = np.array(design.sds)
    w = n / n.sum() if design.weighted else np.full(n.size, 1.0 / n.size)
    truth = mu - w @ mu
    alpha = 1.0 - design.conf
    labels = [f"G{i + 1}" for i in range(design.k)]
    fixed_law = design.method == "pooled"
    covered = rejected = f_rejected = failures = 0
    for rep in range(design.reps):
        rng = np.random.default_rng([design.seed, rep])
        groups = [m + s * _errors(rng, design.error, size) for m, s, size in zip(mu, sd, n)]
        if f_test_pvalue(groups) <= alpha:
            f_rejected += 1
        try:
            fit = fit_difference(GroupedSample(list(zip(labels, groups))), design.method, design.conf,
                                 "two-sided", design.weighted, design.seed, with_critical=fixed_law)
            worst = float(np.max(np.abs(fit.estimate - truth) / fit.se))
            max_t = float(np.max(np.abs(fit.statistic)))
            if fixed_law:
                covered += worst < fit.critical_value
                rejected += max_t >= fit.critical_value
            else:
                covered += not exceeds_critical_value(fit.spec, worst, design.conf, design.seed)
                rejected += exceeds_critical_value(fit.spec, max_t, design.conf, design.seed)
        except GmctError:
            failures += 1
    done = design.reps - failures
    cov = covered / done if done else float("nan")
    rej = rejected / done if done else float("nan")
    return SimResult(
        coverage=cov,
        rejection_rate=rej,
        mc_se=math.sqrt(cov * (1 - cov) / done) if done else float("nan"),
        rejection_mc_se=math.sqrt(rej * (1 - rej) / done) if done else float("nan"),
        f_rejection_rate=f_rejected / design.reps,
        failures=failures,
        reps=design.reps,
        design=asdict(design),
    )
