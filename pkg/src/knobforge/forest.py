"""Regression trees and bootstrap forests built on variance-reduction splits."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .validation import as_float_matrix, as_float_vector, check_fitted, check_n_features


@dataclass
class _Node:
    feature: int = -1  # -1 marks a leaf
    threshold: float = 0.0
    left: "_Node" = None
    right: "_Node" = None
    value: float = 0.0


def _best_split(X, y, indices):
    """Lowest-index feature / lowest threshold among maximal-gain splits."""
    n = indices.size
    ys = y[indices]
    total = ys.sum()
    total_sq = (ys * ys).sum()
    base_sse = total_sq - total * total / n
    if base_sse <= 0:
        return None
    best = None  # (child_sse, feature, threshold)
    for f in range(X.shape[1]):
        xs = X[indices, f]
        order = np.argsort(xs, kind="stable")
        xs_sorted = xs[order]
        ys_sorted = ys[order]
        csum = np.cumsum(ys_sorted)
        csum_sq = np.cumsum(ys_sorted * ys_sorted)
        # split after position i (left = first i+1 points)
        valid = np.flatnonzero(xs_sorted[1:] > xs_sorted[:-1])
        for i in valid:
            n_left = i + 1
            n_right = n - n_left
            left_sse = csum_sq[i] - csum[i] ** 2 / n_left
            right_sum = total - csum[i]
            right_sse = (total_sq - csum_sq[i]) - right_sum**2 / n_right
            child_sse = left_sse + right_sse
            if best is None or child_sse < best[0]:
                best = (child_sse, f, (xs_sorted[i] + xs_sorted[i + 1]) / 2.0)
    # best stays None only when every feature is constant within the node.
    # Zero-gain splits are still taken: impure nodes must keep splitting so
    # distinct inputs can be isolated at unbounded depth.
    return best


class DecisionTreeRegressor(BaseEstimator):
    """CART regression tree; splits minimize the children's summed SSE."""

    def __init__(self, max_depth=50, min_samples_split=2):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split

    def _grow(self, X, y, indices, depth):
        node = _Node(value=float(y[indices].mean()))
        if self.max_depth is not None and depth >= self.max_depth:
            return node
        if indices.size < self.min_samples_split:
            return node
        split = _best_split(X, y, indices)
        if split is None:
            return node
        _, feature, threshold = split
        mask = X[indices, feature] <= threshold
        left_idx = indices[mask]
        right_idx = indices[~mask]
        if left_idx.size == 0 or right_idx.size == 0:
            return node
        node.feature = feature
        node.threshold = threshold
        node.left = self._grow(X, y, left_idx, depth + 1)
        node.right = self._grow(X, y, right_idx, depth + 1)
        return node

    def fit(self, X, y):
        X = as_float_matrix(X)
        y = as_float_vector(y)
        if X.shape[0] != y.size:
            raise ValueError("X and y disagree on sample count")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        self.root_ = self._grow(X, y, np.arange(X.shape[0]), 0)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_fitted(self, "root_")
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            node = self.root_
            while node.feature >= 0:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.value
        return out


class RandomForestRegressor(BaseEstimator):
    """Mean of bootstrap-trained CART trees.

    Every split considers all features. Tree t draws its bootstrap sample
    from a stream seeded by (seed, t), so fits are reproducible and could be
    parallelized without changing results.
    """

    def __init__(self, n_trees=200, max_depth=50, min_samples_split=2, bootstrap=True, seed=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.bootstrap = bootstrap
        self.seed = seed

    def fit(self, X, y):
        X = as_float_matrix(X)
        y = as_float_vector(y)
        if X.shape[0] != y.size:
            raise ValueError("X and y disagree on sample count")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        n = X.shape[0]
        self.trees_ = []
        for t in range(self.n_trees):
            if self.bootstrap:
                rng = np.random.default_rng([self.seed, t])
                sample = rng.integers(0, n, size=n)
                Xt, yt = X[sample], y[sample]
            else:
                Xt, yt = X, y
            tree = DecisionTreeRegressor(
                max_depth=self.max_depth, min_samples_split=self.min_samples_split
            ).fit(Xt, yt)
            self.trees_.append(tree)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_fitted(self, "trees_")
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        preds = np.zeros(X.shape[0])
        for tree in self.trees_:
            preds += tree.predict(X)
        return preds / len(self.trees_)
