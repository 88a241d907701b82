"""K-means and Gaussian-mixture clustering with silhouette/BIC model selection."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from sklearn.base import BaseEstimator

from .exceptions import ClusterDegeneracy, InvalidK, UndefinedSilhouette
from .validation import as_float_matrix, check_fitted, check_n_features

_LOG_2PI = math.log(2.0 * math.pi)


def _pairwise_sq_dists(A, B):
    d2 = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * A @ B.T
    )
    return np.clip(d2, 0.0, None)


def _kmeanspp_init(X, k, rng):
    """Seed centers with the k-means++ D^2 weighting."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)  # all remaining mass on chosen points
        centers[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def _lloyd(X, centers, max_iter):
    """Lloyd iterations until assignments stop changing."""
    n, k = X.shape[0], centers.shape[0]
    labels = np.full(n, -1)
    trace = []
    for _ in range(max_iter):
        d2 = _pairwise_sq_dists(X, centers)
        new_labels = np.argmin(d2, axis=1)
        # Repair empty clusters with the farthest points, only taking from
        # clusters that keep at least one member (pigeonhole guarantees a
        # donor exists whenever some cluster is empty).
        assigned_d2 = d2[np.arange(n), new_labels]
        for c in range(k):
            if not np.any(new_labels == c):
                counts = np.bincount(new_labels, minlength=k)
                candidates = np.where(counts[new_labels] > 1, assigned_d2, -1.0)
                far = int(np.argmax(candidates))
                new_labels[far] = c
                assigned_d2[far] = 0.0
        trace.append(float(assigned_d2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            centers[c] = X[labels == c].mean(axis=0)
    # Keep the loop's labels: when duplicate points force coincident centers
    # the repair is load-bearing and a plain argmin would re-empty a cluster.
    d2 = _pairwise_sq_dists(X, centers)
    inertia = float(d2[np.arange(n), labels].sum())
    return centers, labels, inertia, trace


class KMeans(BaseEstimator):
    """Lloyd's algorithm with k-means++ restarts.

    The best of n_restarts runs (lowest inertia) is kept; every restart is
    seeded from (seed, restart index) so identical inputs give identical
    models.
    """

    def __init__(self, n_clusters=8, seed=0, n_restarts=10, max_iter=300):
        self.n_clusters = n_clusters
        self.seed = seed
        self.n_restarts = n_restarts
        self.max_iter = max_iter

    def fit(self, X):
        X = as_float_matrix(X)
        n = X.shape[0]
        k = self.n_clusters
        if k < 1 or k > n:
            raise InvalidK(f"k={k} impossible for {n} points")
        best = None
        for restart in range(self.n_restarts):
            rng = np.random.default_rng([self.seed, restart])
            centers = _kmeanspp_init(X, k, rng)
            centers, labels, inertia, trace = _lloyd(X, centers.copy(), self.max_iter)
            if best is None or inertia < best[2]:
                best = (centers, labels, inertia, trace)
        self.cluster_centers_, self.labels_, self.inertia_, trace = best
        self.inertia_trace_ = tuple(trace)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_fitted(self, "cluster_centers_")
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        return np.argmin(_pairwise_sq_dists(X, self.cluster_centers_), axis=1)


def silhouette_score(X, labels):
    """Mean silhouette over all points, in [-1, 1].

    a(i) is the mean distance to the point's own cluster (excluding itself),
    b(i) the smallest mean distance to any other cluster; s(i) is their
    normalized gap. Points in singleton clusters score 0.
    """
    X = as_float_matrix(X)
    labels = np.asarray(labels)
    unique = np.unique(labels)
    if unique.size < 2:
        raise UndefinedSilhouette("need at least two clusters")
    # Differences computed directly (not via the Gram identity) so the score
    # really is translation invariant in floating point.
    diff = X[:, None, :] - X[None, :, :]
    dists = np.sqrt((diff * diff).sum(axis=-1))
    n = X.shape[0]
    scores = np.zeros(n)
    members = {c: np.flatnonzero(labels == c) for c in unique}
    for i in range(n):
        own = members[labels[i]]
        if own.size == 1:
            continue  # singleton convention: s(i) = 0
        a = dists[i, own].sum() / (own.size - 1)
        b = min(
            dists[i, members[c]].mean() for c in unique if c != labels[i]
        )
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


class GaussianMixture(BaseEstimator):
    """Full-covariance Gaussian mixture fitted by expectation-maximization.

    Initialized from a k-means++ run; covariances get a small diagonal ridge
    every M-step. Iteration stops when the total log-likelihood gain drops
    below tol. The per-iteration log-likelihood trace is kept so the EM
    monotonicity guarantee can be audited.
    """

    def __init__(
        self,
        n_components=8,
        seed=0,
        n_restarts=1,
        max_iter=200,
        tol=1e-6,
        reg_covar=1e-6,
        kmeans_restarts=10,
    ):
        self.n_components = n_components
        self.seed = seed
        self.n_restarts = n_restarts
        self.max_iter = max_iter
        self.tol = tol
        self.reg_covar = reg_covar
        self.kmeans_restarts = kmeans_restarts

    def _log_prob(self, X, weights, means, covariances):
        n, d = X.shape
        k = means.shape[0]
        log_prob = np.empty((n, k))
        for j in range(k):
            try:
                L = np.linalg.cholesky(covariances[j])
            except np.linalg.LinAlgError:
                raise ClusterDegeneracy(
                    f"component {j} covariance is not positive definite"
                ) from None
            sol = solve_triangular(L, (X - means[j]).T, lower=True)
            log_det = np.sum(np.log(np.diag(L)))
            log_prob[:, j] = -0.5 * (d * _LOG_2PI + np.sum(sol**2, axis=0)) - log_det
        with np.errstate(divide="ignore"):
            log_prob += np.log(weights)[None, :]
        return log_prob

    def _e_step(self, X, weights, means, covariances):
        log_prob = self._log_prob(X, weights, means, covariances)
        row_max = log_prob.max(axis=1, keepdims=True)
        lse = row_max + np.log(np.exp(log_prob - row_max).sum(axis=1, keepdims=True))
        log_likelihood = float(lse.sum())
        resp = np.exp(log_prob - lse)
        resp /= resp.sum(axis=1, keepdims=True)
        return resp, log_likelihood

    def _m_step(self, X, resp):
        n, d = X.shape
        nk = resp.sum(axis=0)
        if np.any(nk <= 0) or not np.all(np.isfinite(nk)):
            raise ClusterDegeneracy("a mixture component lost all its mass")
        weights = nk / n
        means = (resp.T @ X) / nk[:, None]
        covariances = np.empty((resp.shape[1], d, d))
        for j in range(resp.shape[1]):
            diff = X - means[j]
            covariances[j] = (resp[:, j] * diff.T) @ diff / nk[j]
            covariances[j].flat[:: d + 1] += self.reg_covar
        return weights, means, covariances

    def _run_em(self, X, restart):
        km = KMeans(
            n_clusters=self.n_components,
            seed=int(np.random.default_rng([self.seed, restart]).integers(2**31)),
            n_restarts=self.kmeans_restarts,
        ).fit(X)
        resp = np.zeros((X.shape[0], self.n_components))
        resp[np.arange(X.shape[0]), km.labels_] = 1.0
        weights, means, covariances = self._m_step(X, resp)

        trace = []
        prev = None
        for _ in range(self.max_iter):
            resp, log_likelihood = self._e_step(X, weights, means, covariances)
            trace.append(log_likelihood)
            if prev is not None and log_likelihood - prev < self.tol:
                break
            prev = log_likelihood
            weights, means, covariances = self._m_step(X, resp)
        return weights, means, covariances, resp, trace

    def fit(self, X):
        X = as_float_matrix(X)
        n = X.shape[0]
        if self.n_components < 1 or self.n_components > n:
            raise InvalidK(f"k={self.n_components} impossible for {n} points")
        best = None
        failure = None
        for restart in range(self.n_restarts):
            try:
                result = self._run_em(X, restart)
            except ClusterDegeneracy as exc:
                failure = exc
                continue
            if best is None or result[4][-1] > best[4][-1]:
                best = result
        if best is None:
            raise failure if failure is not None else ClusterDegeneracy("no EM run succeeded")
        weights, means, covariances, resp, trace = best
        self.weights_ = weights
        self.means_ = means
        self.covariances_ = covariances
        self.responsibilities_ = resp
        self.labels_ = np.argmax(resp, axis=1)
        self.log_likelihood_ = trace[-1]
        self.log_likelihood_trace_ = tuple(trace)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_fitted(self, "means_")
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        log_prob = self._log_prob(X, self.weights_, self.means_, self.covariances_)
        return np.argmax(log_prob, axis=1)

    def score_total(self, X):
        """Total log-likelihood of X under the fitted mixture."""
        check_fitted(self, "means_")
        X = as_float_matrix(X)
        check_n_features(X, self.n_features_in_)
        _, log_likelihood = self._e_step(X, self.weights_, self.means_, self.covariances_)
        return log_likelihood


def bic(model, X):
    """Bayesian information criterion: -2*LL + p*ln(n), lower is better.

    p counts free parameters of a full-covariance mixture: (k-1) weights,
    k*d means, and k*d*(d+1)/2 covariance entries.
    """
    X = as_float_matrix(X)
    n, d = X.shape
    k = model.n_components
    p = (k - 1) + k * d + k * d * (d + 1) // 2
    return float(-2.0 * model.score_total(X) + p * math.log(n))


@dataclass(frozen=True)
class KCandidate:
    k: int
    silhouette: float
    bic: float = None


@dataclass(frozen=True)
class ModelSelection:
    """Silhouette sweep over candidate cluster counts."""

    candidates: tuple
    chosen_k: int
    rule: str  # "silhouette_max" or "silhouette_then_bic"


def _fit_clusterer(X, k, clusterer, seed, n_restarts):
    if clusterer == "kmeans":
        return KMeans(n_clusters=k, seed=seed, n_restarts=n_restarts).fit(X)
    if clusterer == "gmm":
        return GaussianMixture(n_components=k, seed=seed, kmeans_restarts=n_restarts).fit(X)
    raise ValueError(f"unknown clusterer {clusterer!r}")


def sweep_k(X, k_range, clusterer="kmeans", seed=0, n_restarts=10):
    """Fit every candidate k and score it; returns (ModelSelection, models).

    Candidates that collapse (a degenerate fit, or fewer than two distinct
    labels) are recorded with a NaN silhouette and excluded from selection.
    K-means picks the silhouette argmax (ties to the smaller k); the mixture
    breaks silhouette ties by lower BIC, then smaller k.
    """
    X = as_float_matrix(X)
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise InvalidK("empty k range")
    ks = [k for k in ks if 1 <= k <= X.shape[0]]
    if not ks:
        raise InvalidK("no candidate k is feasible for this many points")

    candidates = []
    models = {}
    for k in ks:
        try:
            model = _fit_clusterer(X, k, clusterer, seed, n_restarts)
            labels = model.labels_
            sil = silhouette_score(X, labels) if np.unique(labels).size >= 2 else float("nan")
        except ClusterDegeneracy:
            candidates.append(KCandidate(k=k, silhouette=float("nan")))
            continue
        model_bic = bic(model, X) if clusterer == "gmm" else None
        candidates.append(KCandidate(k=k, silhouette=sil, bic=model_bic))
        models[k] = model

    valid = [c for c in candidates if not math.isnan(c.silhouette)]
    if not valid:
        raise ClusterDegeneracy("every candidate k produced a degenerate clustering")

    if clusterer == "gmm":
        rule = "silhouette_then_bic"
        chosen = min(valid, key=lambda c: (-c.silhouette, c.bic, c.k))
    else:
        rule = "silhouette_max"
        chosen = min(valid, key=lambda c: (-c.silhouette, c.k))
    selection = ModelSelection(candidates=tuple(candidates), chosen_k=chosen.k, rule=rule)
    return selection, models


def select_k(X, k_range, clusterer="kmeans", seed=0, n_restarts=10):
    """Pick the cluster count with the best silhouette over k_range."""
    selection, _ = sweep_k(X, k_range, clusterer=clusterer, seed=seed, n_restarts=n_restarts)
    return selection
