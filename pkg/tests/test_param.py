import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from gmct.core import GroupedSample
from gmct.errors import DegenerateError, ValidationError
from gmct.mvt import MvtSpec
from gmct.param import adjusted_pvalue, mct_difference, unadjusted_pvalue
from oracles import max_abs_mc


@pytest.fixture(scope="module")
def three_groups():
    rng = np.random.default_rng(21)
    return GroupedSample({"a": rng.normal(10, 2, 5), "b": rng.normal(12, 2, 5), "c": rng.normal(9, 2, 5)})


def test_identical_groups():
    res = mct_difference(GroupedSample({"a": [1, 2, 3], "b": [1, 2, 3]}), "pooled")
    for row in res.rows:
        assert row.estimate == 0 and row.statistic == 0 and row.p_adjusted == 1.0
        assert_allclose(-row.lower, row.upper)


def test_pooled_formula_chain(three_groups):
    res = mct_difference(three_groups, "pooled", weighted=False)
    xs = three_groups.observations
    means = [sum(x) / len(x) for x in xs]
    ss = sum(sum((v - m) ** 2 for v in x) for x, m in zip(xs, means))
    S = math.sqrt(ss / (15 - 3))
    for i, row in enumerate(res.rows):
        c = [(2 / 3 if j == i else -1 / 3) for j in range(3)]
        est = sum(cj * m for cj, m in zip(c, means))
        se = S * math.sqrt(sum(cj * cj / 5 for cj in c))
        assert_allclose(row.estimate, est, rtol=1e-12, atol=1e-12)
        assert_allclose(row.se, se, rtol=1e-12)
        assert_allclose(row.statistic, est / se, rtol=1e-10)
        assert row.df == 12
        assert_allclose([row.lower, row.upper], [est - res.critical_value * se, est + res.critical_value * se],
                        rtol=1e-12)
    assert_allclose(res.correlation, np.full((3, 3), -0.5) + 1.5 * np.eye(3), atol=1e-12)
    # the cutoff must give 95% joint coverage of the xi=3, rho=-1/2 t law with 12 df
    cover = max_abs_mc(res.correlation, 12, res.critical_value, 1_000_000, 8)
    assert abs(cover - 0.95) < 2e-3 + 4 * math.sqrt(0.95 * 0.05 / 1_000_000)


def test_adjusted_pvalue_examples():
    assert adjusted_pvalue(0.0, MvtSpec(np.eye(3))) == 1.0
    assert_allclose(adjusted_pvalue(1.959964, MvtSpec(np.eye(1))), 0.05, atol=1e-6)
    assert_allclose(adjusted_pvalue(2.2365, MvtSpec(np.eye(2))), 0.05, atol=1e-3)
    # one-sided: sign of the observed statistic matters
    spec = MvtSpec(np.eye(1))
    assert_allclose(adjusted_pvalue(1.644854, spec, "greater"), 0.05, atol=1e-6)
    assert_allclose(adjusted_pvalue(-1.644854, spec, "less"), 0.05, atol=1e-6)


def test_adjusted_pvalue_floor():
    p = adjusted_pvalue(60.0, MvtSpec(np.eye(1)))
    assert p == np.finfo(float).eps


@pytest.mark.parametrize("mode", ["pooled", "welch", "sandwich-HC3"])
def test_result_invariants(three_groups, mode):
    res = mct_difference(three_groups, mode)
    p = res.column("p_adjusted")
    assert res.global_p == p.min()
    for row in res.rows:
        unadj = unadjusted_pvalue(row.statistic, res.metadata["joint_df"])
        assert row.p_adjusted >= unadj - 3e-4
        half = (row.upper - row.lower) / 2
        assert half >= stats.t.ppf(0.975, res.metadata["joint_df"]) * row.se
        excludes = row.lower > 0 or row.upper < 0
        if abs(row.p_adjusted - 0.05) > 1e-3:
            assert excludes == (row.p_adjusted <= 0.05)


def test_welch_df(three_groups):
    from gmct.contrasts import satterthwaite_df
    res = mct_difference(three_groups, "welch")
    s2 = np.array([np.var(x, ddof=1) for x in three_groups.observations])
    w = np.full(3, 1 / 3)
    dfs = [satterthwaite_df(np.eye(3)[i] - w, s2, [5, 5, 5]) for i in range(3)]
    assert_allclose(res.column("df"), dfs, rtol=1e-12)
    assert_allclose(res.metadata["joint_df"], min(dfs), rtol=1e-12)


def test_hc3_standard_errors(three_groups):
    res = mct_difference(three_groups, "sandwich-HC3", weighted=False)
    s2 = np.array([np.var(x, ddof=1) for x in three_groups.observations])
    C = np.eye(3) - 1 / 3
    assert_allclose(res.column("se"), np.sqrt((C ** 2) @ (s2 / 4)), rtol=1e-12)
    assert_allclose(res.column("df"), 12)


def test_shift_and_scale_equivariance(three_groups):
    base = mct_difference(three_groups, "welch")
    shifted = mct_difference(three_groups.map(lambda x: x + 100.0), "welch")
    assert_allclose(shifted.column("estimate"), base.column("estimate"), atol=1e-10)
    assert_allclose(shifted.column("statistic"), base.column("statistic"), rtol=1e-8)
    scaled = mct_difference(three_groups.map(lambda x: 3.0 * x), "welch")
    assert_allclose(scaled.column("estimate"), 3 * base.column("estimate"), rtol=1e-12, atol=1e-12)
    assert_allclose(scaled.column("upper"), 3 * base.column("upper"), rtol=1e-9)


def test_one_sided(three_groups):
    res = mct_difference(three_groups, "pooled", alternative="greater")
    assert np.all(np.isinf(res.column("upper")))
    two = mct_difference(three_groups, "pooled")
    assert res.critical_value < two.critical_value
    less = mct_difference(three_groups, "pooled", alternative="less")
    assert np.all(np.isneginf(less.column("lower")))


def test_errors():
    with pytest.raises(DegenerateError):
        mct_difference(GroupedSample({"a": [1, 1], "b": [2, 2]}), "pooled")
    with pytest.raises(ValidationError):
        mct_difference(GroupedSample({"a": [1, 2], "b": [2, 3]}), "bogus")
    with pytest.raises(ValidationError):
        mct_difference(GroupedSample({"a": [1, 2], "b": [2, 3]}), conf=0.4)
