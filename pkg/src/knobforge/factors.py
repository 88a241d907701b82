"""Principal-axis factor extraction over metric correlation matrices.

Hundreds of runtime metrics are heavily redundant: groups of them move
together because they observe the same underlying behaviour. Eigendecomposing
the metric correlation matrix yields one coordinate row per metric; metrics
that correlate strongly end up close together in that space, which is what
the downstream clustering step exploits.
"""

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import DegenerateInput
from .validation import as_float_matrix, check_fitted


class FactorAnalysis(BaseEstimator):
    """Eigendecomposition of the metric correlation matrix with Kaiser retention.

    Parameters
    ----------
    retention_threshold : float
        Factors whose eigenvalue exceeds this are retained. The default of
        1.0 keeps factors that explain more variance than a single metric.
    retention_tol : float
        Slack added to the threshold so eigenvalues that equal it up to
        floating-point drift are not retained.

    Attributes
    ----------
    eigenvalues_ : ndarray of shape (n_metrics,)
        All eigenvalues, sorted descending. They sum to the metric count.
    eigenvectors_ : ndarray of shape (n_metrics, n_metrics)
        Orthonormal eigenvectors (columns), ordered to match eigenvalues_,
        each flipped so its largest-magnitude entry is positive.
    n_retained_ : int
        Number of factors retained by the threshold rule.
    loadings_ : ndarray of shape (n_metrics, n_retained_)
        Row i holds metric i's coordinates: eigenvector entries scaled by
        sqrt(eigenvalue), so distances between rows reflect correlation.
    metric_names_ : tuple of str
        Names supplied at fit time (generated if omitted).
    """

    def __init__(self, retention_threshold=1.0, retention_tol=1e-8):
        self.retention_threshold = retention_threshold
        self.retention_tol = retention_tol

    def fit(self, X, metric_names=None):
        """Fit on an (n_observations, n_metrics) matrix.

        Raises DegenerateInput if any metric is constant (its correlations
        are undefined); constant columns must be dropped beforehand.
        """
        X = as_float_matrix(X)
        n_obs, n_metrics = X.shape
        if n_obs < 2 or n_metrics < 2:
            raise DegenerateInput(
                f"need at least 2 observations and 2 metrics, got {X.shape}"
            )
        if metric_names is None:
            metric_names = [f"m{i}" for i in range(n_metrics)]
        if len(metric_names) != n_metrics:
            raise ValueError("metric_names length does not match X")

        stds = X.std(axis=0)
        if np.any(stds == 0):
            flat = [metric_names[i] for i in np.flatnonzero(stds == 0)]
            raise DegenerateInput(f"constant metrics have no correlations: {flat}")
        corr = np.corrcoef(X, rowvar=False)
        if not np.all(np.isfinite(corr)):
            raise DegenerateInput("correlation matrix contains non-finite entries")

        eigenvalues, eigenvectors = np.linalg.eigh(corr)
        eigenvalues = eigenvalues[::-1]
        eigenvectors = eigenvectors[:, ::-1]
        # Fix the reflection ambiguity: largest-magnitude entry made positive.
        for j in range(n_metrics):
            pivot = np.argmax(np.abs(eigenvectors[:, j]))
            if eigenvectors[pivot, j] < 0:
                eigenvectors[:, j] = -eigenvectors[:, j]

        retained = eigenvalues > self.retention_threshold + self.retention_tol
        n_retained = int(np.count_nonzero(retained))
        scale = np.sqrt(np.clip(eigenvalues[:n_retained], 0.0, None))
        self.eigenvalues_ = eigenvalues
        self.eigenvectors_ = eigenvectors
        self.n_retained_ = n_retained
        self.loadings_ = eigenvectors[:, :n_retained] * scale
        self.metric_names_ = tuple(metric_names)
        return self

    def loading_row(self, metric_name):
        check_fitted(self, "loadings_")
        return self.loadings_[self.metric_names_.index(metric_name)]
