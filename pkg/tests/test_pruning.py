import numpy as np
import pytest

from knobforge import DegenerateInput, FactorAnalysis, MetricPruner, prune_metrics
from test_factors import orthogonal_design


def grouped_metrics(rng, n_groups=8, per_group=5, n_obs=150, noise=0.02):
    """Metrics that are positive affine images of one latent per group."""
    latents = rng.normal(size=(n_obs, n_groups))
    cols, names, groups = [], [], []
    for g in range(n_groups):
        for j in range(per_group):
            alpha = rng.uniform(-1, 1)
            beta = rng.uniform(0.5, 2.0)
            cols.append(alpha + beta * (latents[:, g] + noise * rng.normal(size=n_obs)))
            names.append(f"g{g}_m{j}")
            groups.append(g)
    return np.column_stack(cols), names, groups


@pytest.mark.parametrize("clusterer", ["kmeans", "gmm"])
def test_planted_groups_recovered(rng, clusterer):
    X, names, groups = grouped_metrics(rng)
    pruner = MetricPruner(clusterer=clusterer, seed=0).fit(X, metric_names=names)
    assert pruner.k_ == 8
    chosen_groups = sorted(groups[names.index(n)] for n in pruner.pruned_.names)
    assert chosen_groups == list(range(8))


def test_representative_is_nearest_to_center(rng):
    X, names, _ = grouped_metrics(rng, n_groups=4, per_group=6)
    pruner = MetricPruner(clusterer="kmeans", k_min=2, k_max=8, seed=0).fit(
        X, metric_names=names
    )
    fa = pruner.factor_model_
    # brute re-check: each selected metric minimizes distance within its cluster
    from knobforge.cluster import KMeans

    km = KMeans(n_clusters=pruner.k_, seed=0).fit(fa.loadings_)
    for selected in pruner.pruned_.selected:
        i = names.index(selected.name)
        c = km.labels_[i]
        members = np.flatnonzero(km.labels_ == c)
        dists = np.linalg.norm(fa.loadings_[members] - km.cluster_centers_[c], axis=1)
        assert dists.min() == pytest.approx(
            np.linalg.norm(fa.loadings_[i] - km.cluster_centers_[c]), abs=1e-12
        )


def test_two_metrics_singleton_clusters():
    z = np.linspace(0, 1, 30)
    X = np.column_stack([z + 0.001 * np.sin(z * 40), -z + 0.001 * np.cos(z * 40)])
    fa = FactorAnalysis().fit(X, metric_names=["a", "b"])
    pruned = prune_metrics(fa, k_range=[2], seed=0)
    assert pruned.k == 2
    assert sorted(pruned.names) == ["a", "b"]
    assert sorted(m.cluster for m in pruned.selected) == [0, 1]


def test_selected_names_exist_and_counts(rng):
    X, names, _ = grouped_metrics(rng, n_groups=3, per_group=4)
    pruner = MetricPruner(k_min=2, k_max=6, seed=1).fit(X, metric_names=names)
    assert len(pruner.pruned_.selected) == pruner.k_
    assert set(pruner.pruned_.names) <= set(names)
    clusters = [m.cluster for m in pruner.pruned_.selected]
    assert sorted(clusters) == list(range(pruner.k_))


def test_permutation_invariance(rng):
    X, names, _ = grouped_metrics(rng, n_groups=4, per_group=5)
    pruner = MetricPruner(k_min=2, k_max=8, seed=0).fit(X, metric_names=names)
    perm = rng.permutation(len(names))
    X_p = X[:, perm]
    names_p = [names[i] for i in perm]
    pruner_p = MetricPruner(k_min=2, k_max=8, seed=0).fit(X_p, metric_names=names_p)
    assert sorted(pruner.pruned_.names) == sorted(pruner_p.pruned_.names)


def test_no_retained_factors_errors():
    X = orthogonal_design()
    fa = FactorAnalysis().fit(X)
    with pytest.raises(DegenerateInput):
        prune_metrics(fa)


def test_transform_selects_columns(rng):
    X, names, _ = grouped_metrics(rng, n_groups=3, per_group=4)
    pruner = MetricPruner(k_min=2, k_max=6, seed=0).fit(X, metric_names=names)
    reduced = pruner.transform(X)
    assert reduced.shape == (X.shape[0], pruner.k_)
    for out_col, name in zip(reduced.T, pruner.pruned_.names):
        np.testing.assert_array_equal(out_col, X[:, names.index(name)])


def test_pruned_set_round_trips_as_dict(rng):
    X, names, _ = grouped_metrics(rng, n_groups=3, per_group=4)
    pruner = MetricPruner(k_min=2, k_max=6, seed=0).fit(X, metric_names=names)
    from knobforge import PrunedMetricSet

    data = pruner.pruned_.to_dict()
    assert set(data) == {"k", "metrics"}
    assert all(set(m) == {"name", "cluster", "distance"} for m in data["metrics"])
    assert PrunedMetricSet.from_dict(data) == pruner.pruned_
