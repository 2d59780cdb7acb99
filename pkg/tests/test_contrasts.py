import numpy as np
import pytest
from numpy.testing import assert_allclose

from gmct.contrasts import (
    ContrastMatrix,
    clip_to_psd,
    correlation_of_contrasts,
    grand_mean_contrasts,
    satterthwaite_df,
)
from gmct.errors import DegenerateError, ValidationError


def test_balanced_three_groups():
    c = grand_mean_contrasts([4, 4, 4], weighted=False).coefficients
    expected = np.full((3, 3), -1 / 3) + np.eye(3)
    assert_allclose(c, expected, atol=1e-15)
    # the (-1, 1/2, 1/2) display rows are -3/2 times these
    table = grand_mean_contrasts([4, 4, 4]).to_table_scale()
    assert table.convention == "table-scale"
    assert_allclose(table.coefficients, np.full((3, 3), 0.5) - 1.5 * np.eye(3), atol=1e-15)
    assert_allclose(table.coefficients, -1.5 * c, atol=1e-15)


def test_two_groups():
    assert_allclose(grand_mean_contrasts([5, 5]).coefficients, [[0.5, -0.5], [-0.5, 0.5]])
    c = grand_mean_contrasts([1, 3], weighted=True).coefficients
    assert_allclose(c[0], [0.75, -0.75])
    r = correlation_of_contrasts(c, [1.0, 1 / 3])
    assert_allclose(r[0, 1], -1.0)


def test_rows_sum_to_zero_unbalanced():
    c = grand_mean_contrasts([3, 7, 11, 2, 19])
    assert np.all(np.abs(c.coefficients.sum(axis=1)) < 1e-12)
    assert_allclose(c.weights, np.array([3, 7, 11, 2, 19]) / 42)


def test_contrast_matrix_validation():
    with pytest.raises(ValidationError):
        ContrastMatrix(np.array([[1.0, 1.0]]), ("a",))
    with pytest.raises(ValidationError):
        ContrastMatrix(np.array([[0.0, 0.0]]), ("a",))
    with pytest.raises(ValidationError):
        grand_mean_contrasts([4])


def test_balanced_correlation_is_minus_half():
    c = grand_mean_contrasts([6, 6, 6])
    r = correlation_of_contrasts(c, np.full(3, 1 / 6))
    assert_allclose(r, np.full((3, 3), -0.5) + 1.5 * np.eye(3), atol=1e-14)


def test_correlation_orthogonal_and_single_row():
    c = np.array([[1.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]])
    assert_allclose(correlation_of_contrasts(c, np.ones(4)), np.eye(2))
    assert_allclose(correlation_of_contrasts(c[:1], np.ones(4)), [[1.0]])
    with pytest.raises(DegenerateError):
        correlation_of_contrasts(c, [0.0, 0.0, 1.0, 1.0])


def test_satterthwaite_examples():
    assert_allclose(satterthwaite_df([1, -1], [1, 1], [10, 10]), 18.0)
    assert_allclose(satterthwaite_df([1, -1], [1, 0], [10, 10]), 9.0)
    # exact rational evaluation of the formula: 140454/34651
    assert_allclose(satterthwaite_df([2 / 3, -1 / 3, -1 / 3], [1, 4, 9], [5, 7, 3]), 140454 / 34651, rtol=1e-12)
    with pytest.raises(DegenerateError):
        satterthwaite_df([1, -1], [0, 0], [5, 5])


def test_clip_to_psd():
    r = np.array([[1.0, 0.9, -0.9], [0.9, 1.0, 0.9], [-0.9, 0.9, 1.0]])
    fixed, clipped = clip_to_psd(r)
    assert clipped > 0
    assert np.linalg.eigvalsh(fixed).min() > -1e-12
    assert_allclose(np.diag(fixed), 1.0)
    same, none = clip_to_psd(np.eye(3))
    assert none == 0.0
    assert_allclose(same, np.eye(3))
