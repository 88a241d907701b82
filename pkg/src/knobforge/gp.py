"""Gaussian process regression with an RBF kernel and Cholesky solves.

The posterior mean is all the pipeline consumes, so the fitted state is just
the training inputs, the dual weights (K + alpha*I)^-1 (y - mean), and the
kernel hyperparameters. Targets are centered internally so the zero-mean
prior is honest; the mean is added back at prediction time.
"""

import math

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from sklearn.base import BaseEstimator

from .exceptions import NumericalError
from .validation import (
    as_float_matrix,
    as_float_vector,
    check_fitted,
    check_n_features,
    check_same_length,
)

_LOG_2PI = math.log(2.0 * math.pi)

# Log-spaced hyperparameter grids searched when optimize_kernel is on.
DEFAULT_LENGTH_SCALE_GRID = tuple(np.logspace(-2.0, 3.0, 13))
DEFAULT_SIGNAL_VARIANCE_GRID = tuple(np.logspace(-1.0, 2.0, 7))


def rbf_kernel(A, B, length_scale, signal_variance):
    """signal_variance * exp(-||a - b||^2 / (2 * length_scale^2))."""
    A = as_float_matrix(A, "A")
    B = as_float_matrix(B, "B")
    d2 = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * A @ B.T
    )
    d2 = np.clip(d2, 0.0, None)
    return signal_variance * np.exp(-0.5 * d2 / (length_scale**2))


def _factor(X, alpha, length_scale, signal_variance):
    K = rbf_kernel(X, X, length_scale, signal_variance)
    K[np.diag_indices_from(K)] += alpha
    try:
        return cho_factor(K, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Cholesky factorization failed: {exc}") from None


def log_marginal_likelihood(X, y, alpha, length_scale, signal_variance):
    """-1/2 y^T (K+aI)^-1 y - 1/2 log|K+aI| - n/2 log(2 pi).

    y is used as given; the estimator passes its centered targets here.
    """
    X = as_float_matrix(X)
    y = as_float_vector(y)
    check_same_length(X, y, names=("X", "y"))
    factor = _factor(X, alpha, length_scale, signal_variance)
    solved = cho_solve(factor, y)
    log_det = 2.0 * np.sum(np.log(np.diag(factor[0])))
    n = X.shape[0]
    return float(-0.5 * (y @ solved) - 0.5 * log_det - 0.5 * n * _LOG_2PI)


class GaussianProcessRegressor(BaseEstimator):
    """RBF-kernel GP posterior mean with optional grid-searched kernel.

    Parameters
    ----------
    alpha : float
        Observation-noise variance added to the kernel diagonal. Must be
        positive; it also keeps the factorization well conditioned.
    length_scale, signal_variance : float
        RBF kernel parameters, used directly when optimize_kernel is False
        and as fallbacks otherwise.
    optimize_kernel : bool
        When True, fit maximizes the log marginal likelihood over a fixed
        log-spaced grid of (length_scale, signal_variance) pairs. Ties keep
        the earliest grid point, so fits are deterministic.

    Attributes
    ----------
    length_scale_, signal_variance_ : float
        Kernel parameters actually used.
    log_marginal_likelihood_ : float
        LML of the fitted model on its (centered) training targets.
    """

    def __init__(
        self,
        alpha=1e-1,
        length_scale=1.0,
        signal_variance=1.0,
        optimize_kernel=True,
        length_scale_grid=DEFAULT_LENGTH_SCALE_GRID,
        signal_variance_grid=DEFAULT_SIGNAL_VARIANCE_GRID,
    ):
        self.alpha = alpha
        self.length_scale = length_scale
        self.signal_variance = signal_variance
        self.optimize_kernel = optimize_kernel
        self.length_scale_grid = length_scale_grid
        self.signal_variance_grid = signal_variance_grid

    def fit(self, X, y):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.length_scale <= 0 or self.signal_variance <= 0:
            raise ValueError("kernel parameters must be positive")
        X = as_float_matrix(X)
        y = as_float_vector(y)
        check_same_length(X, y, names=("X", "y"))
        if X.shape[0] < 1:
            raise ValueError("need at least one training row")

        self.y_mean_ = float(y.mean())
        centered = y - self.y_mean_

        if self.optimize_kernel:
            if not len(self.length_scale_grid) or not len(self.signal_variance_grid):
                raise ValueError("kernel grids must be non-empty when optimize_kernel is set")
            best = None
            for ls in self.length_scale_grid:
                for sv in self.signal_variance_grid:
                    lml = log_marginal_likelihood(X, centered, self.alpha, ls, sv)
                    if best is None or lml > best[0]:
                        best = (lml, ls, sv)
            self.log_marginal_likelihood_, self.length_scale_, self.signal_variance_ = best
        else:
            self.length_scale_ = self.length_scale
            self.signal_variance_ = self.signal_variance
            self.log_marginal_likelihood_ = log_marginal_likelihood(
                X, centered, self.alpha, self.length_scale_, self.signal_variance_
            )

        factor = _factor(X, self.alpha, self.length_scale_, self.signal_variance_)
        self.dual_coef_ = cho_solve(factor, centered)
        self.X_train_ = X
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_fitted(self, "dual_coef_")
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        k_star = rbf_kernel(X, self.X_train_, self.length_scale_, self.signal_variance_)
        return self.y_mean_ + k_star @ self.dual_coef_
