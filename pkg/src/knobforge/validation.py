"""Input validation helpers used by the estimators."""

import numpy as np
from sklearn.exceptions import NotFittedError

from .exceptions import ShapeError


def as_float_matrix(X, name="X"):
    """Coerce to a finite 2-d float64 array."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-d, got ndim={arr.ndim}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_float_vector(y, name="y"):
    """Coerce to a finite 1-d float64 array."""
    arr = np.asarray(y, dtype=np.float64).ravel()
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_same_length(a, b, names=("y_true", "y_pred")):
    if len(a) != len(b):
        raise ShapeError(f"{names[0]} has {len(a)} entries, {names[1]} has {len(b)}")


def check_fitted(estimator, attribute):
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted; call fit() first"
        )


def check_n_features(X, n_features, context="predict"):
    if X.shape[1] != n_features:
        raise ShapeError(
            f"{context} input has {X.shape[1]} features, model was fitted with {n_features}"
        )
