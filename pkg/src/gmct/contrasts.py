"""Grand-mean contrast matrices, contrast correlations and Welch-type df."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateError, ValidationError

PSD_TOL = 1e-8


@dataclass(frozen=True)
class ContrastMatrix:
    """Rows are comparisons, columns are groups.

    ``convention`` is ``"estimation-scale"`` for rows ``e_q - w`` (estimates
    read as difference to the overall mean) or ``"table-scale"`` for the
    ``(-1, 1/(k-1), ...)`` display form.
    """

    coefficients: np.ndarray
    row_labels: tuple[str, ...]
    convention: str = "estimation-scale"
    weights: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != 2:
            raise ValidationError("contrast coefficients must be a 2-d array")
        if np.any(np.abs(c.sum(axis=1)) >= 1e-12):
            raise ValidationError("every contrast row must sum to zero")
        if np.any(np.all(c == 0, axis=1)):
            raise ValidationError("contrast rows must not be all zero")
        if len(self.row_labels) != c.shape[0]:
            raise ValidationError("one label per contrast row required")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    @property
    def shape(self):
        return self.coefficients.shape

    def to_table_scale(self) -> "ContrastMatrix":
        """Rescale each row so the group's own coefficient is -1.

        For a balanced design this gives the ``(-1, 1/2, 1/2)`` pattern; it
        only changes the sign and length of each row.
        """
        c = self.coefficients
        diag = np.diag(c)
        scaled = -c / diag[:, None]
        return ContrastMatrix(_rezero(scaled), self.row_labels, "table-scale", self.weights)


def _rezero(c):
    # kill the floating residue left by rescaling so rows sum to 0 to 1e-12
    c = np.array(c, dtype=float)
    c[:, -1] -= c.sum(axis=1)
    return c


def grand_mean_weights(n: Sequence[int], weighted: bool = True) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if weighted:
        return n / n.sum()
    return np.full(n.size, 1.0 / n.size)


def grand_mean_contrasts(n: Sequence[int], weighted: bool = True,
                         labels: Sequence[str] | None = None) -> ContrastMatrix:
    """Rows ``e_q - w`` comparing each group with the overall mean.

    ``w_i = n_i / N`` when weighted, ``1/k`` otherwise.
    """
    n = np.asarray(n)
    k = n.size
    if k < 2:
        raise ValidationError(f"grand-mean contrasts need k >= 2 groups, got {k}")
    if np.any(n < 1):
        raise ValidationError("group sizes must be >= 1")
    w = grand_mean_weights(n, weighted)
    c = np.eye(k) - w[None, :]
    if labels is None:
        labels = [f"G{i + 1}" for i in range(k)]
    return ContrastMatrix(_rezero(c), tuple(labels), "estimation-scale", w)


def clip_to_psd(r: np.ndarray, tol: float = PSD_TOL) -> tuple[np.ndarray, float]:
    """Return a correlation matrix with eigenvalues below ``-tol`` clipped to 0.

    The second value is the largest clipped magnitude (0 when nothing was done).
    """
    r = 0.5 * (r + r.T)
    vals, vecs = np.linalg.eigh(r)
    if vals.min() >= -tol:
        return r, 0.0
    clipped = float(-vals.min())
    vals = np.clip(vals, 0.0, None)
    r = (vecs * vals) @ vecs.T
    d = np.sqrt(np.diag(r))
    r = r / np.outer(d, d)
    np.fill_diagonal(r, 1.0)
    return 0.5 * (r + r.T), clipped


def correlation_from_covariance(cov: np.ndarray) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    d = np.diag(cov)
    if np.any(d <= 0):
        bad = np.flatnonzero(d <= 0).tolist()
        raise DegenerateError(f"contrast rows {bad} have zero variance")
    s = np.sqrt(d)
    r = cov / np.outer(s, s)
    r = np.clip(0.5 * (r + r.T), -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return r


def correlation_of_contrasts(contrasts, w: Sequence[float]) -> np.ndarray:
    """Correlation of contrast statistics for independent group means.

    ``w_i`` is the variance of group mean ``i`` up to a common factor:
    ``1/n_i`` in the homoscedastic case, ``s_i^2/n_i`` for the plug-in
    heteroscedastic case.
    """
    c = contrasts.coefficients if isinstance(contrasts, ContrastMatrix) else np.atleast_2d(contrasts)
    w = np.asarray(w, dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValidationError("variance weights must be finite and non-negative")
    return correlation_from_covariance((c * w) @ c.T)


def satterthwaite_df(c: Sequence[float], s2: Sequence[float], n: Sequence[int]) -> float:
    """Welch-Satterthwaite degrees of freedom of ``sum_i c_i ybar_i``."""
    c = np.asarray(c, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    n = np.asarray(n, dtype=float)
    if np.any(n < 2):
        raise ValidationError("Welch df needs n_i >= 2 in every group")
    terms = c ** 2 * s2 / n
    total = terms.sum()
    if total <= 0:
        raise DegenerateError("all groups entering the contrast have zero variance")
    return float(total ** 2 / np.sum(terms ** 2 / (n - 1)))
