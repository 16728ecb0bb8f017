"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_X_y

from .exceptions import ShapeError
from .matrix import FeatureMatrix


def check_matrix(X) -> np.ndarray:
    """2-D finite float64 array from an array-like or a FeatureMatrix."""
    if isinstance(X, FeatureMatrix):
        return X.data
    return check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=True)


def check_matrix_and_labels(X, y=None):
    if isinstance(X, FeatureMatrix):
        return X.data, X.labels if y is None else np.asarray(y).reshape(-1)
    X, y = check_X_y(X, y, dtype=np.float64, ensure_all_finite=True)
    return X, y


def check_width(X: np.ndarray, expected: int, what: str = "input") -> None:
    if X.ndim != 2 or X.shape[1] != expected:
        raise ShapeError(f"{what} has shape {X.shape}, expected (n, {expected})")
