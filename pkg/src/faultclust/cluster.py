"""K-Means clustering with k-means++ seeding and model-selection helpers.

Lloyd iterations minimize the within-cluster sum of squared distances.
Assignment ties break toward the lowest cluster index, empty clusters are
repaired by promoting the point farthest from its centroid, and every
restart uses a seed derived from (random_state, restart index), so fits
are fully deterministic.
"""

from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .validation import check_matrix, check_positive_int


def _squared_distances(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(N, k) squared Euclidean distances, clipped at zero."""
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.maximum(d2, 0.0)


def _kmeanspp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """D^2-weighted seeding: each next center is sampled proportionally to
    the squared distance from the nearest already-chosen center."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total == 0.0:
            centers[j] = X[rng.integers(n)]
            continue
        r = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(closest), r))
        idx = min(idx, n - 1)
        centers[j] = X[idx]
        closest = np.minimum(closest, ((X - centers[j]) ** 2).sum(axis=1))
    return centers


class LloydKMeans(BaseEstimator, ClusterMixin):
    """K-Means estimator (fit/predict) keeping the best of n_init restarts.

    Attributes after fit: ``cluster_centers_``, ``labels_``, ``inertia_``,
    ``sizes_``, ``n_iter_``, ``inertia_trace_`` (per-iteration objective of
    the winning restart, recorded after each assignment step).
    """

    def __init__(self, n_clusters: int = 15, init: str = "k-means++", n_init: int = 10,
                 max_iter: int = 300, tol: float = 1e-4, random_state: int = 0):
        self.n_clusters = n_clusters
        self.init = init
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_matrix(X, min_rows=1)
        k = check_positive_int(self.n_clusters, name="n_clusters")
        if k > X.shape[0]:
            raise ValueError(f"n_clusters={k} exceeds number of points {X.shape[0]}")
        if self.init not in ("k-means++", "random"):
            raise ValueError(f"unknown init {self.init!r}")

        best = None
        for restart in range(check_positive_int(self.n_init, name="n_init")):
            rng = np.random.default_rng([self.random_state, restart])
            result = self._single_run(X, k, rng)
            if best is None or result["inertia"] < best["inertia"]:
                best = result

        self.cluster_centers_ = best["centers"]
        self.labels_ = best["labels"]
        self.inertia_ = best["inertia"]
        self.n_iter_ = best["n_iter"]
        self.inertia_trace_ = np.array(best["trace"])
        self.sizes_ = np.bincount(self.labels_, minlength=k)
        return self

    def _single_run(self, X, k, rng):
        n = X.shape[0]
        if self.init == "k-means++":
            centers = _kmeanspp_init(X, k, rng)
        else:
            centers = X[rng.choice(n, size=k, replace=False)]

        trace = []
        labels = np.zeros(n, dtype=int)
        for it in range(self.max_iter):
            d2 = _squared_distances(X, centers)
            labels = d2.argmin(axis=1)
            trace.append(float(d2[np.arange(n), labels].sum()))
            labels = self._repair_empty(X, centers, labels, k)

            new_centers = centers.copy()
            for c in range(k):
                members = labels == c
                if members.any():
                    new_centers[c] = X[members].mean(axis=0)
            shift = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
            centers = new_centers
            if shift < self.tol:
                break

        # final pass makes labels consistent with the converged centers and
        # centers exactly the means of their members
        d2 = _squared_distances(X, centers)
        labels = d2.argmin(axis=1)
        labels = self._repair_empty(X, centers, labels, k)
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = X[members].mean(axis=0)
        inertia = float(((X - centers[labels]) ** 2).sum())
        trace.append(inertia)
        return {
            "centers": centers, "labels": labels, "inertia": inertia,
            "n_iter": it + 1, "trace": trace,
        }

    @staticmethod
    def _repair_empty(X, centers, labels, k):
        counts = np.bincount(labels, minlength=k)
        for c in np.flatnonzero(counts == 0):
            dist_own = ((X - centers[labels]) ** 2).sum(axis=1)
            farthest = int(dist_own.argmax())
            labels[farthest] = c
            centers[c] = X[farthest]
            counts = np.bincount(labels, minlength=k)
        return labels

    def predict(self, X):
        """Nearest-centroid assignment; ties break to the lowest index."""
        X = check_matrix(X)
        if X.shape[1] != self.cluster_centers_.shape[1]:
            raise ValueError(
                f"X has {X.shape[1]} columns, centroids have {self.cluster_centers_.shape[1]}"
            )
        return _squared_distances(X, self.cluster_centers_).argmin(axis=1)

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "k": int(self.n_clusters),
            "seed": int(self.random_state),
            "inertia": float(self.inertia_),
            "centroids": [[float(v) for v in row] for row in self.cluster_centers_],
            "sizes": [int(s) for s in self.sizes_],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LloydKMeans":
        model = cls(n_clusters=payload["k"], random_state=payload.get("seed", 0))
        model.cluster_centers_ = np.array(payload["centroids"], dtype=float)
        model.inertia_ = float(payload["inertia"])
        model.sizes_ = np.array(payload["sizes"], dtype=int)
        return model

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load_json(cls, path) -> "LloydKMeans":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def elbow_curve(X, k_range, *, n_init: int = 10, max_iter: int = 300, tol: float = 1e-4,
                random_state: int = 0) -> list[tuple[int, float]]:
    """Inertia per k, using a shared seed schedule across all k values."""
    ks = list(k_range)
    if not ks:
        raise ValueError("k_range is empty")
    out = []
    for k in ks:
        model = LloydKMeans(n_clusters=k, n_init=n_init, max_iter=max_iter, tol=tol,
                            random_state=random_state).fit(X)
        out.append((k, model.inertia_))
    return out


def silhouette_samples(X, assignments) -> np.ndarray:
    """Per-sample silhouette values s(i) = (b - a) / max(a, b).

    a(i) is the mean distance to the other members of i's cluster, b(i) the
    smallest mean distance to any other cluster. Singleton clusters and
    all-coincident points contribute 0.
    """
    X = check_matrix(X, min_rows=3)
    labels = np.asarray(assignments, dtype=int)
    if labels.shape[0] != X.shape[0]:
        raise ValueError("assignments length must match number of points")
    clusters = np.unique(labels)
    if clusters.size < 2:
        raise ValueError("silhouette is undefined for a single cluster")

    d2 = _squared_distances(X, X)
    dist = np.sqrt(d2)
    n = X.shape[0]
    s = np.zeros(n)
    members = {c: labels == c for c in clusters}
    counts = {c: int(m.sum()) for c, m in members.items()}

    for i in range(n):
        own = labels[i]
        if counts[own] == 1:
            continue  # singleton: s(i) = 0
        a = dist[i, members[own]].sum() / (counts[own] - 1)
        b = min(dist[i, members[c]].mean() for c in clusters if c != own)
        denom = max(a, b)
        s[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return s


def silhouette_score(X, assignments) -> float:
    """Mean silhouette over all samples; in [-1, 1]."""
    return float(silhouette_samples(X, assignments).mean())
