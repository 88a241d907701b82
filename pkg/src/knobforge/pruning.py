"""Redundant-metric pruning: cluster factor loadings, keep one metric per cluster."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .cluster import ClusterDegeneracy, sweep_k
from .exceptions import DegenerateInput
from .factors import FactorAnalysis
from .validation import as_float_matrix, check_fitted


@dataclass(frozen=True)
class SelectedMetric:
    name: str
    cluster: int
    distance: float


@dataclass(frozen=True)
class PrunedMetricSet:
    """One representative metric per loading-space cluster."""

    k: int
    selected: tuple

    @property
    def names(self):
        return tuple(m.name for m in self.selected)

    def to_dict(self):
        return {
            "k": self.k,
            "metrics": [
                {"name": m.name, "cluster": m.cluster, "distance": m.distance}
                for m in self.selected
            ],
        }

    @classmethod
    def from_dict(cls, data):
        selected = tuple(
            SelectedMetric(m["name"], m["cluster"], m["distance"])
            for m in data["metrics"]
        )
        return cls(k=data["k"], selected=selected)


def _cluster_centers(model):
    return model.cluster_centers_ if hasattr(model, "cluster_centers_") else model.means_


def _representatives(loadings, metric_names, model, k):
    centers = _cluster_centers(model)
    labels = model.labels_
    selected = []
    for c in range(k):
        members = np.flatnonzero(labels == c)
        if members.size == 0:
            raise ClusterDegeneracy(f"cluster {c} has no metrics")
        dists = np.linalg.norm(loadings[members] - centers[c], axis=1)
        best = members[int(np.argmin(dists))]  # first minimum: lowest metric index
        selected.append(
            SelectedMetric(
                name=metric_names[best], cluster=c, distance=float(dists.min())
            )
        )
    return PrunedMetricSet(k=k, selected=tuple(selected))


def prune_with_selection(factor_model, clusterer="kmeans", k_range=range(2, 16), seed=0, n_restarts=10):
    """Cluster the loading rows; returns (ModelSelection, PrunedMetricSet).

    Requires a fitted FactorAnalysis with at least one retained factor; a
    model that retained nothing means the metrics carry no shared structure
    and pruning would be meaningless.
    """
    check_fitted(factor_model, "loadings_")
    if factor_model.n_retained_ < 1:
        raise DegenerateInput("no factors retained; nothing to cluster")
    selection, models = sweep_k(
        factor_model.loadings_, k_range, clusterer=clusterer, seed=seed, n_restarts=n_restarts
    )
    model = models[selection.chosen_k]
    pruned = _representatives(
        factor_model.loadings_, factor_model.metric_names_, model, selection.chosen_k
    )
    return selection, pruned


def prune_metrics(factor_model, clusterer="kmeans", k_range=range(2, 16), seed=0, n_restarts=10):
    """Cluster the loading rows and pick each cluster's center-nearest metric."""
    _, pruned = prune_with_selection(
        factor_model, clusterer=clusterer, k_range=k_range, seed=seed, n_restarts=n_restarts
    )
    return pruned


class MetricPruner(BaseEstimator):
    """Factor analysis + clustering as a single transformer.

    fit(X) expects an (n_observations, n_metrics) matrix; transform(X)
    returns only the selected representative columns.
    """

    def __init__(self, clusterer="kmeans", k_min=2, k_max=15, seed=0, n_restarts=10):
        self.clusterer = clusterer
        self.k_min = k_min
        self.k_max = k_max
        self.seed = seed
        self.n_restarts = n_restarts

    def fit(self, X, metric_names=None):
        X = as_float_matrix(X)
        fa = FactorAnalysis().fit(X, metric_names=metric_names)
        selection, pruned = prune_with_selection(
            fa,
            clusterer=self.clusterer,
            k_range=range(self.k_min, self.k_max + 1),
            seed=self.seed,
            n_restarts=self.n_restarts,
        )
        self.factor_model_ = fa
        self.selection_ = selection
        self.pruned_ = pruned
        self.k_ = selection.chosen_k
        self.selected_indices_ = tuple(
            fa.metric_names_.index(name) for name in self.pruned_.names
        )
        return self

    def transform(self, X):
        check_fitted(self, "pruned_")
        X = as_float_matrix(X)
        return X[:, list(self.selected_indices_)]
