import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from gmct.contrasts import correlation_of_contrasts, grand_mean_contrasts, satterthwaite_df
from gmct.core import GroupedSample, summarize
from gmct.npar import pairwise_relative_effect, relative_effects
from oracles import relative_effect_enumeration

sizes = st.lists(st.integers(1, 50), min_size=2, max_size=12)
small_ints = st.lists(st.integers(-3, 3), min_size=1, max_size=8)


@given(sizes, st.booleans())
def test_contrast_rows_sum_to_zero(n, weighted):
    c = grand_mean_contrasts(n, weighted).coefficients
    assert np.all(np.abs(c.sum(axis=1)) < 1e-12)


@given(sizes, st.data())
def test_correlation_row_rescaling_and_sign_flip(n, data):
    k = len(n)
    c = grand_mean_contrasts(n).coefficients
    w = 1.0 / np.asarray(n, float)
    r = correlation_of_contrasts(c, w)
    q = data.draw(st.integers(0, k - 1))
    scale = data.draw(st.floats(0.1, 10))
    c2 = c.copy()
    c2[q] *= -scale
    r2 = correlation_of_contrasts(c2, w)
    flip = np.ones(k)
    flip[q] = -1
    assert_allclose(r2, r * np.outer(flip, flip), atol=1e-12)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(0.01, 10), st.integers(2, 40)), min_size=2, max_size=8),
       st.floats(0.1, 10))
def test_satterthwaite_bounds_and_scale_invariance(groups, lam):
    c = np.array([g[0] for g in groups])
    s2 = np.array([g[1] for g in groups])
    n = np.array([g[2] for g in groups])
    active = np.abs(c) > 1e-3
    if not active.any():
        return
    c = np.where(active, c, 0.0)
    df = satterthwaite_df(c, s2, n)
    assert min(n[active] - 1) * (1 - 1e-9) <= df <= sum(n[active] - 1) * (1 + 1e-9)
    assert_allclose(satterthwaite_df(lam * c, s2, n), df, rtol=1e-10)


@given(small_ints, small_ints)
def test_relative_effect_antisymmetry(x, y):
    assert pairwise_relative_effect(x, y) + pairwise_relative_effect(y, x) == 1.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(0, 6), min_size=2, max_size=6), min_size=2, max_size=4))
def test_pseudo_rank_estimates_equal_enumeration(groups):
    s = GroupedSample([(f"g{i}", g) for i, g in enumerate(groups)])
    want = [float(p) for p in relative_effect_enumeration(s.observations)]
    assert_allclose(relative_effects(s), want, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.floats(-50, 50), min_size=2, max_size=6), min_size=2, max_size=4))
def test_relative_effects_rank_invariant(groups):
    s = GroupedSample([(f"g{i}", g) for i, g in enumerate(groups)])
    assert np.array_equal(relative_effects(s), relative_effects(s.map(lambda x: x ** 3 + x)))


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=20), st.randoms(use_true_random=False))
def test_summarize_permutation_invariant(x, rnd):
    y = list(x)
    rnd.shuffle(y)
    a, b = summarize(GroupedSample({"a": x, "b": y}))
    assert_allclose([a.mean, a.sd], [b.mean, b.sd], rtol=1e-9, atol=1e-9)
