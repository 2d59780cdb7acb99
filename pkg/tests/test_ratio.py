import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gmct.core import GroupedSample
from gmct.errors import DegenerateError, ValidationError
from gmct.param import mct_difference
from gmct.ratio import fieller_interval, mct_ratio
from oracles import fieller_grid


def t_ratio(theta, i, means, v, b):
    """Linearized ratio statistic written out longhand."""
    num = means[i] - theta * sum(bj * m for bj, m in zip(b, means))
    var = 0.0
    for j in range(len(means)):
        coef = (1.0 if j == i else 0.0) - theta * b[j]
        var += coef * coef * v[j]
    return num / math.sqrt(var)


def welch_inputs(sample):
    n = sample.sizes.astype(float)
    means = np.array([x.mean() for x in sample.observations])
    v = np.array([x.var(ddof=1) for x in sample.observations]) / n
    return means, v, n / n.sum()


@pytest.fixture(scope="module")
def strong():
    rng = np.random.default_rng(17)
    return GroupedSample({"a": rng.normal(20, 2, 8), "b": rng.normal(10, 1, 10), "c": rng.normal(5, 1, 12)})


def test_identical_groups():
    res = mct_ratio(GroupedSample({"a": [1.0, 2.0, 3.0], "b": [1.0, 2.0, 3.0]}))
    for row in res.rows:
        assert_allclose(row.estimate, 1.0)
        assert row.lower <= 1.0 <= row.upper


def test_endpoints_solve_the_quadratic(strong):
    res = mct_ratio(strong, "welch")
    means, v, b = welch_inputs(strong)
    c = res.critical_value
    for i, row in enumerate(res.rows):
        assert row.shape == "bounded"
        assert row.lower < row.estimate < row.upper
        for end in (row.lower, row.upper):
            assert abs(abs(t_ratio(end, i, means, v, b)) - c) < 1e-6
        grid = np.linspace(row.estimate / 10, row.estimate * 10, 100_000)
        step = grid[1] - grid[0]
        inside = grid[fieller_grid(means[i], b @ means, v[i], b @ (b * v), b[i] * v[i], c, grid)]
        assert abs(inside.min() - row.lower) <= step
        assert abs(inside.max() - row.upper) <= step


def test_scale_equivariance(strong):
    base = mct_ratio(strong, "pooled")
    scaled = mct_ratio(strong.map(lambda x: 7.5 * x), "pooled")
    for col in ("estimate", "lower", "upper", "p_adjusted"):
        assert_allclose(scaled.column(col), base.column(col), rtol=1e-9)


def test_shrinks_to_point_as_crit_vanishes():
    iv = fieller_interval(3.0, 2.0, 0.1, 0.05, 0.01, 1e-6)
    assert iv.shape == "bounded"
    assert_allclose([iv.lower, iv.upper], [1.5, 1.5], atol=1e-5)


def test_shapes():
    # denominator not distinguishable from zero
    iv = fieller_interval(3.0, 0.1, 0.1, 1.0, 0.0, 2.0)
    assert iv.shape == "exclusive-complement"
    assert not iv.contains(0.5 * (iv.lower + iv.upper)) and iv.contains(iv.upper + 1)
    iv = fieller_interval(0.1, 0.1, 1.0, 1.0, 0.0, 2.0)
    assert iv.shape == "whole-line" and iv.contains(1e9)
    iv = fieller_interval(3.0, 2.0, 1.0, 1.0, 0.0, 2.0)
    assert iv.shape == "unbounded-above" and math.isinf(iv.upper)
    iv = fieller_interval(3.0, -2.0, 1.0, 1.0, 0.0, 2.0)
    assert iv.shape == "unbounded-below" and math.isinf(iv.lower)


def test_negative_overall_mean():
    rng = np.random.default_rng(2)
    s = GroupedSample({"a": rng.normal(-10, 1, 8), "b": rng.normal(-12, 1, 8), "c": rng.normal(-9, 1, 8)})
    res = mct_ratio(s)
    for row in res.rows:
        assert row.shape == "bounded" and row.lower < row.estimate < row.upper


def test_agrees_with_difference_test_under_the_null():
    agree = 0
    total = 0
    for seed in range(12):
        rng = np.random.default_rng(seed)
        s = GroupedSample({g: rng.normal(50, 5, 10) for g in "abcd"})
        r = mct_ratio(s, "pooled")
        d = mct_difference(s, "pooled")
        for rr, dd in zip(r.rows, d.rows):
            total += 1
            agree += (rr.lower > 1 or rr.upper < 1) == (dd.lower > 0 or dd.upper < 0)
    assert agree / total >= 0.95


def test_errors():
    with pytest.raises(DegenerateError):
        mct_ratio(GroupedSample({"a": [-1.0, 1.0], "b": [-2.0, 2.0]}))
    with pytest.raises(ValidationError):
        mct_ratio(GroupedSample({"a": [1.0, 2.0], "b": [2.0, 3.0]}), "sandwich-HC3")
