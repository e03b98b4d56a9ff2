"""Dimensionality reduction: variance-retention PCA and exact t-SNE.

The t-SNE here is the exact O(N^2) formulation: per-point Gaussian
bandwidths calibrated to a target perplexity by bisection, Student-t
low-dimensional affinities, and plain momentum gradient descent on the
KL divergence with an early-exaggeration phase. Desk-scale datasets
(N up to a few thousand) do not need the tree-based approximations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import check_matrix, check_positive_int

P_FLOOR = 1e-12
EXPLORATION_ITERS = 250  # early exaggeration + low momentum phase
MOMENTUM_EARLY = 0.5
MOMENTUM_LATE = 0.8
MIN_GAIN = 0.01
INIT_STD = 1e-4


@dataclass(frozen=True)
class Embedding:
    """Reduced-dimension coordinates per record."""

    record_ids: np.ndarray
    coords: np.ndarray  # (N, d)
    final_kl: float | None  # KL divergence at the final t-SNE iterate; None for PCA
    space: str  # "pca" or "tsne"

    @property
    def out_dims(self) -> int:
        return self.coords.shape[1]


class PrincipalComponents(BaseEstimator, TransformerMixin):
    """PCA via SVD of the centered data, selecting components by retained variance.

    Parameters
    ----------
    variance_target : float in (0, 1]
        Keep the smallest number of components whose cumulative explained
        variance ratio reaches this target. Ignored when ``n_components``
        is given.
    n_components : int or None
        Fixed component count (capped at the data rank).

    Component signs are fixed so each component's largest-magnitude
    loading is positive, making fits reproducible.
    """

    def __init__(self, variance_target: float = 0.95, n_components: int | None = None):
        self.variance_target = variance_target
        self.n_components = n_components

    def fit(self, X, y=None):
        X = check_matrix(X, min_rows=2)
        if not 0.0 < self.variance_target <= 1.0:
            raise ValueError("variance_target must be in (0, 1]")
        n, d = X.shape
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        _, s, vt = np.linalg.svd(centered, full_matrices=False)

        total = float((s**2).sum())
        if total == 0.0:
            raise ValueError("input has rank 0 (all rows identical); nothing to project")
        ratios = s**2 / total
        rank_tol = s.max() * max(n, d) * np.finfo(float).eps
        rank = int((s > rank_tol).sum())

        if self.n_components is not None:
            k = min(check_positive_int(self.n_components, name="n_components"), rank)
        else:
            # small slack absorbs cumsum rounding when the target is 1.0
            k = int(np.searchsorted(np.cumsum(ratios), self.variance_target - 1e-12) + 1)
            k = min(k, rank)

        components = vt[:k].T.copy()  # (D, k)
        for j in range(k):
            if components[np.argmax(np.abs(components[:, j])), j] < 0:
                components[:, j] = -components[:, j]

        self.components_ = components
        self.explained_variance_ = s[:k] ** 2 / (n - 1)
        self.explained_variance_ratio_ = ratios[:k]
        self.n_components_ = k
        return self

    def transform(self, X):
        X = check_matrix(X)
        if X.shape[1] != self.components_.shape[0]:
            raise ValueError(
                f"X has {X.shape[1]} columns, model was fit on {self.components_.shape[0]}"
            )
        return (X - self.mean_) @ self.components_

    def inverse_transform(self, Z):
        return np.asarray(Z) @ self.components_.T + self.mean_


def joint_probabilities(X, perplexity: float, *, tol: float = 1e-4, max_bisect: int = 50):
    """Symmetrized t-SNE input affinities from pairwise squared distances.

    Each row's Gaussian bandwidth is found by bisection so that the row's
    perplexity (exponentiated Shannon entropy) matches the target within
    ``tol``, capped at ``max_bisect`` iterations. Conditional rows are
    floored at 1e-12 and renormalized, which also keeps rows collapsed by
    duplicate points usable.
    """
    X = check_matrix(X, min_rows=4)
    if perplexity <= 1.0:
        raise ValueError("perplexity must be > 1")
    n = X.shape[0]

    sq_norms = (X**2).sum(axis=1)
    d2 = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)

    conditional = np.zeros((n, n))
    for i in range(n):
        row = d2[i]
        beta, lo, hi = 1.0, 0.0, np.inf
        p = None
        for _ in range(max_bisect):
            logits = -beta * row
            logits[i] = -np.inf
            m = logits.max()
            weights = np.exp(logits - m)
            total = weights.sum()
            p = weights / total
            nz = p > 0
            entropy = -(p[nz] * np.log(p[nz])).sum()
            perp = np.exp(entropy)
            if abs(perp - perplexity) <= tol:
                break
            if perp > perplexity:
                lo = beta
                beta = beta * 2.0 if hi == np.inf else 0.5 * (beta + hi)
            else:
                hi = beta
                beta = beta * 0.5 if lo == 0.0 else 0.5 * (beta + lo)
        p = np.maximum(p, P_FLOOR)
        p[i] = 0.0
        conditional[i] = p / p.sum()

    return (conditional + conditional.T) / (2.0 * n)


def _student_t_weights(Y: np.ndarray) -> np.ndarray:
    sq_norms = (Y**2).sum(axis=1)
    d2 = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (Y @ Y.T)
    np.maximum(d2, 0.0, out=d2)
    w = 1.0 / (1.0 + d2)
    np.fill_diagonal(w, 0.0)
    return w


def kl_divergence_and_grad(P: np.ndarray, Y: np.ndarray) -> tuple[float, np.ndarray]:
    """KL(P || Q(Y)) and its gradient 4 * sum_j (p-q) w (y_i - y_j)."""
    w = _student_t_weights(Y)
    q = w / w.sum()

    mask = P > 0
    kl = float((P[mask] * np.log(P[mask] / np.maximum(q[mask], P_FLOOR))).sum())

    pq_w = (P - q) * w
    grad = 4.0 * (pq_w.sum(axis=1)[:, None] * Y - pq_w @ Y)
    return kl, grad


def kl_divergence(P: np.ndarray, Y: np.ndarray) -> float:
    w = _student_t_weights(Y)
    q = w / w.sum()
    mask = P > 0
    return float((P[mask] * np.log(P[mask] / np.maximum(q[mask], P_FLOOR))).sum())


class ExactTsne(BaseEstimator):
    """Exact t-SNE embedding minimizing KL divergence by momentum descent.

    Momentum is 0.5 for the first 250 iterations and 0.8 afterwards; the
    affinities are multiplied by ``early_exaggeration`` during that first
    phase. Per-coordinate adaptive gains (the Jacobs scheme the original
    t-SNE uses) stabilize the descent at the conventional learning rate.
    Runs are bitwise reproducible for a fixed ``random_state``
    (single-threaded numpy).
    """

    def __init__(self, n_components: int = 2, perplexity: float = 30.0, n_iter: int = 1000,
                 learning_rate: float = 200.0, early_exaggeration: float = 12.0,
                 random_state: int = 0):
        self.n_components = n_components
        self.perplexity = perplexity
        self.n_iter = n_iter
        self.learning_rate = learning_rate
        self.early_exaggeration = early_exaggeration
        self.random_state = random_state

    def fit_transform(self, X, y=None):
        X = check_matrix(X, min_rows=4)
        n = X.shape[0]
        if self.n_components not in (2, 3):
            raise ValueError("n_components must be 2 or 3")
        if not self.perplexity < (n - 1) / 3:
            raise ValueError(
                f"perplexity {self.perplexity} too large for {n} points; need < (N-1)/3"
            )

        P = joint_probabilities(X, self.perplexity)
        P_exaggerated = P * self.early_exaggeration

        rng = np.random.default_rng(self.random_state)
        Y = rng.normal(0.0, INIT_STD, size=(n, self.n_components))
        update = np.zeros_like(Y)
        gains = np.ones_like(Y)

        trace = []
        for it in range(self.n_iter):
            exploring = it < EXPLORATION_ITERS
            objective_p = P_exaggerated if exploring else P
            momentum = MOMENTUM_EARLY if exploring else MOMENTUM_LATE

            _, grad = kl_divergence_and_grad(objective_p, Y)
            trace.append(kl_divergence(P, Y))

            opposed = (update * grad) < 0
            gains[opposed] += 0.2
            gains[~opposed] *= 0.8
            np.clip(gains, MIN_GAIN, None, out=gains)

            update = momentum * update - self.learning_rate * gains * grad
            Y = Y + update
            if not np.all(np.isfinite(Y)):
                raise FloatingPointError(f"t-SNE diverged to non-finite values at iteration {it}")

        trace.append(kl_divergence(P, Y))
        self.embedding_ = Y
        self.kl_divergence_ = trace[-1]
        self.kl_trace_ = np.array(trace)
        return Y


def reduce_for_clustering(
    features,
    mode: str,
    *,
    record_ids=None,
    variance_target: float = 0.95,
    pca_components: int = 50,
    out_dims: int = 2,
    perplexity: float = 30.0,
    iterations: int = 1000,
    learning_rate: float = 200.0,
    early_exaggeration: float = 12.0,
    seed: int = 0,
) -> tuple[Embedding, np.ndarray | None]:
    """Reduce a feature matrix for K-Means, returning (embedding, kl_trace).

    mode="pca": PCA scores at ``variance_target``.
    mode="pca_then_tsne": PCA to min(pca_components, rank) dimensions, then
    t-SNE down to ``out_dims``.
    """
    X = check_matrix(features, min_rows=2)
    if record_ids is None:
        record_ids = np.arange(X.shape[0])
    record_ids = np.asarray(record_ids, dtype=int)

    if mode == "pca":
        coords = PrincipalComponents(variance_target=variance_target).fit_transform(X)
        return Embedding(record_ids=record_ids, coords=coords, final_kl=None, space="pca"), None
    if mode == "pca_then_tsne":
        scores = PrincipalComponents(n_components=pca_components).fit_transform(X)
        tsne = ExactTsne(
            n_components=out_dims,
            perplexity=perplexity,
            n_iter=iterations,
            learning_rate=learning_rate,
            early_exaggeration=early_exaggeration,
            random_state=seed,
        )
        coords = tsne.fit_transform(scores)
        emb = Embedding(
            record_ids=record_ids, coords=coords, final_kl=tsne.kl_divergence_, space="tsne"
        )
        return emb, tsne.kl_trace_
    raise ValueError(f"unknown reduction mode: {mode!r}")


def save_embedding_csv(emb: Embedding, path) -> None:
    d = emb.out_dims
    names = ["x", "y", "z"][:d] if d <= 3 else [f"c{i}" for i in range(d)]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("record_id," + ",".join(names) + "\n")
        for rid, row in zip(emb.record_ids, emb.coords):
            f.write(str(int(rid)) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def load_embedding_csv(path, space: str = "unknown") -> Embedding:
    import csv

    ids, rows = [], []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        next(reader)
        for line in reader:
            ids.append(int(line[0]))
            rows.append([float(v) for v in line[1:]])
    return Embedding(
        record_ids=np.array(ids, dtype=int),
        coords=np.array(rows),
        final_kl=None,
        space=space,
    )


def save_kl_trace_csv(trace: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("iteration,kl\n")
        for i, v in enumerate(trace):
            f.write(f"{i},{float(v)!r}\n")
