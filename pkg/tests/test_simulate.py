import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from gmct.errors import ValidationError
from gmct.simulate import SimDesign, _errors, f_test_pvalue, simulate_coverage


def test_f_test_matches_scipy():
    rng = np.random.default_rng(1)
    groups = [rng.normal(m, 1, n) for m, n in zip((0, 0.3, 1.0), (5, 9, 7))]
    assert_allclose(f_test_pvalue(groups), stats.f_oneway(*groups).pvalue, rtol=1e-10)


@pytest.mark.parametrize("kind", ["normal", "lognormal", "t3"])
def test_errors_are_standardized(kind):
    e = _errors(np.random.default_rng(2), kind, 400_000)
    assert abs(e.mean()) < 0.02
    # t3 has infinite fourth moment, so its sample variance is noisy
    assert abs(e.var() - 1) < (0.1 if kind == "t3" else 0.03)


def test_determinism():
    d = SimDesign.balanced(3, 6, reps=100, seed=9)
    assert simulate_coverage(d) == simulate_coverage(d)
    other = simulate_coverage(SimDesign.balanced(3, 6, reps=100, seed=10))
    assert other.design["seed"] == 10


def test_mc_se_and_counts():
    r = simulate_coverage(SimDesign.balanced(3, 8, reps=200, seed=1))
    assert r.failures == 0 and r.reps == 200
    assert_allclose(r.mc_se, np.sqrt(r.coverage * (1 - r.coverage) / 200))
    # under the null coverage of the truth 0 and non-rejection coincide
    assert_allclose(r.coverage + r.rejection_rate, 1.0)


def test_shifted_design_truth():
    # coverage refers to the true differences to the weighted overall mean
    r = simulate_coverage(SimDesign(n=(6, 12), means=(3.0, 0.0), reps=200, seed=2))
    assert r.coverage > 0.9 and r.rejection_rate > 0.9


@pytest.mark.parametrize("kw", [
    dict(n=(5,)), dict(n=(5, 1)), dict(n=(5, 5), reps=50), dict(n=(5, 5), sds=(1, 0)),
    dict(n=(5, 5), error="cauchy"), dict(n=(5, 5), method="ols"), dict(n=(5, 5), means=(0,)),
])
def test_design_validation(kw):
    with pytest.raises(ValidationError):
        SimDesign(**kw)
