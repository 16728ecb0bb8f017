"""Mutual-information feature ranking and PCA variance analysis."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted

from ._rowwise import rowwise_product
from ._validation import check_matrix, check_matrix_and_labels
from .exceptions import ArgumentError, EmptyInput
from .matrix import FeatureMatrix


# ---------------------------------------------------------------------------
# mutual information


def equal_frequency_bins(column, bins: int) -> np.ndarray:
    """Bin index per value, equal-frequency by rank.

    A run of tied values sits at its average rank ``r``, and the whole run goes
    to bin ``floor(r * bins / n)``.  Ties therefore never straddle a boundary
    and heavy ties collapse bins, yet a column with two distinct values always
    keeps them apart for any ``bins >= 2``.
    """
    x = np.asarray(column, dtype=np.float64).reshape(-1)
    n = x.size
    uniq, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    first_rank = np.concatenate(([0], np.cumsum(counts)[:-1]))
    # average rank is first_rank + (count - 1) / 2; kept in integers as twice that
    bin_of_value = ((2 * first_rank + counts - 1) * bins) // (2 * n)
    return bin_of_value[inverse]


def discrete_mutual_information(x_codes, y_codes) -> float:
    """MI in nats between two discrete vectors, from their joint histogram."""
    x = np.asarray(x_codes).reshape(-1)
    y = np.asarray(y_codes).reshape(-1)
    n = x.size
    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    joint = np.zeros((xi.max() + 1, yi.max() + 1))
    np.add.at(joint, (xi, yi), 1.0)
    pxy = joint / n
    px = pxy.sum(axis=1, keepdims=True)
    py = pxy.sum(axis=0, keepdims=True)
    nz = pxy > 0
    mi = float(np.sum(pxy[nz] * np.log(pxy[nz] / (px @ py)[nz])))
    return max(mi, 0.0)


def mutual_information(column, labels, bins: int = 10) -> float:
    x = np.asarray(column, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if x.size < 1 or x.size != y.size:
        raise ArgumentError(f"need equal non-empty lengths, got {x.size} and {y.size}")
    if bins < 2:
        raise ArgumentError(f"bins must be >= 2, got {bins}")
    return discrete_mutual_information(equal_frequency_bins(x, bins), y)


@dataclass(frozen=True)
class MiReport:
    scores: tuple[tuple[str, float], ...]
    bins: int
    n_rows: int

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.scores]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["name", "score"])
            for name, score in self.scores:
                w.writerow([name, repr(score)])

    @classmethod
    def read_csv(cls, path: str | Path, bins: int = 0, n_rows: int = 0) -> "MiReport":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        return cls(tuple((r[0], float(r[1])) for r in rows[1:]), bins, n_rows)


def rank_features_mi(m: FeatureMatrix, bins: int = 10, k: int | None = None) -> MiReport:
    """Score every column against the binary label; keep the top ``k``."""
    k = m.n_cols if k is None else k
    if not 1 <= k <= m.n_cols:
        raise ArgumentError(f"k must be in [1, {m.n_cols}], got {k}")
    scores = [
        (name, mutual_information(m.data[:, j], m.labels, bins))
        for j, name in enumerate(m.feature_names)
    ]
    scores.sort(key=lambda t: (-t[1], t[0]))
    return MiReport(tuple(scores[:k]), bins, m.n_rows)


class MutualInfoSelector(SelectorMixin, BaseEstimator):
    """Keep the ``k`` columns with the highest binned mutual information with ``y``."""

    def __init__(self, k=20, bins=10):
        self.k = k
        self.bins = bins

    def fit(self, X, y):
        X, y = check_matrix_and_labels(X, y)
        if not 1 <= self.k <= X.shape[1]:
            raise ArgumentError(f"k must be in [1, {X.shape[1]}], got {self.k}")
        self.n_features_in_ = X.shape[1]
        self.scores_ = np.array([mutual_information(X[:, j], y, self.bins) for j in range(X.shape[1])])
        # stable sort on -score keeps lower column index first on ties
        order = np.argsort(-self.scores_, kind="stable")
        self.selected_ = np.sort(order[: self.k])
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "selected_")
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.selected_] = True
        return mask


# ---------------------------------------------------------------------------
# PCA


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    eigenvalues: np.ndarray
    components: np.ndarray  # rows are principal axes
    explained_variance_ratio: np.ndarray
    feature_names: tuple[str, ...] = ()


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(vectors.shape[0]), idx])
    signs[signs == 0] = 1.0
    return vectors * signs[:, None]


def pca_fit(m: FeatureMatrix | np.ndarray) -> PcaModel:
    """Eigendecomposition of the sample covariance (divisor n - 1)."""
    X = m.data if isinstance(m, FeatureMatrix) else check_matrix(m)
    names = m.feature_names if isinstance(m, FeatureMatrix) else ()
    n = X.shape[0]
    if n < 2:
        raise EmptyInput(f"PCA needs at least 2 rows, got {n}")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    comps = _fix_signs(vecs[:, order].T)
    total = vals.sum()
    if total > 0:
        ratio = vals / total
    else:
        ratio = np.full(vals.size, 1.0 / vals.size)
    return PcaModel(mean, vals, comps, ratio, tuple(names))


def cumulative_explained_variance(p: PcaModel) -> np.ndarray:
    return np.cumsum(p.explained_variance_ratio)


def write_cumulative_variance_csv(curve, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "cumulative"])
        for i, v in enumerate(np.asarray(curve).tolist(), start=1):
            w.writerow([i, repr(v)])


def read_cumulative_variance_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return np.array([float(r[1]) for r in rows[1:]])


def pca_transform(p: PcaModel, m: FeatureMatrix, k: int) -> FeatureMatrix:
    d = p.components.shape[0]
    if not 1 <= k <= d:
        raise ArgumentError(f"k must be in [1, {d}], got {k}")
    if m.n_cols != d:
        raise ArgumentError(f"matrix has {m.n_cols} columns, PCA was fitted on {d}")
    return m.with_data(project(m.data, p.mean, p.components[:k]), [f"pc{i + 1}" for i in range(k)])


def project(X: np.ndarray, mean: np.ndarray, axes: np.ndarray) -> np.ndarray:
    """Rows of ``X`` centered and projected onto ``axes``; row-independent arithmetic."""
    return rowwise_product(X - mean, axes)


class FlowPCA(TransformerMixin, BaseEstimator):
    """Projection onto the top ``n_components`` principal axes (all when None)."""

    def __init__(self, n_components=None):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = check_matrix(X)
        self.model_ = pca_fit(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        X = check_matrix(X)
        k = self.n_components or self.n_features_in_
        return project(X, self.model_.mean, self.model_.components[:k])

    @property
    def explained_variance_ratio_(self):
        check_is_fitted(self, "model_")
        return self.model_.explained_variance_ratio
