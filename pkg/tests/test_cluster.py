import numpy as np
import pytest

from faultclust.cluster import (
    LloydKMeans,
    elbow_curve,
    silhouette_samples,
    silhouette_score,
)


def three_blobs(per_blob=30, sigma=0.1, seed=0):
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]])  # 50 sigma apart
    X = np.vstack([rng.normal(c, sigma, size=(per_blob, 2)) for c in centers])
    truth = np.repeat(np.arange(3), per_blob)
    return X, truth


def match_accuracy(truth, pred):
    """Best accuracy over all cluster-index permutations (brute force)."""
    from itertools import permutations

    k = max(truth.max(), pred.max()) + 1
    best = 0.0
    for perm in permutations(range(k)):
        mapped = np.array([perm[p] for p in pred])
        best = max(best, (mapped == truth).mean())
    return best


class TestKMeansFit:
    def test_k_equals_n(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(8, 3))
        model = LloydKMeans(n_clusters=8, n_init=3, random_state=0).fit(X)
        assert model.inertia_ == 0.0
        assert sorted(model.labels_) == list(range(8))
        for i, label in enumerate(model.labels_):
            assert np.allclose(model.cluster_centers_[label], X[i])

    def test_k_equals_one(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(40, 4))
        model = LloydKMeans(n_clusters=1, n_init=1, random_state=0).fit(X)
        assert np.allclose(model.cluster_centers_[0], X.mean(axis=0))
        expected = ((X - X.mean(axis=0)) ** 2).sum()
        assert np.isclose(model.inertia_, expected, rtol=1e-9)

    def test_perfect_recovery_on_blobs(self):
        # oracle: permutation-matched accuracy against generator labels
        X, truth = three_blobs()
        model = LloydKMeans(n_clusters=3, n_init=10, random_state=0).fit(X)
        assert match_accuracy(truth, model.labels_) == 1.0

    def test_inertia_consistent_with_assignments(self):
        X, _ = three_blobs(seed=3)
        model = LloydKMeans(n_clusters=3, random_state=0).fit(X)
        recomputed = ((X - model.cluster_centers_[model.labels_]) ** 2).sum()
        assert np.isclose(model.inertia_, recomputed, rtol=1e-9)

    def test_centroids_are_member_means(self):
        X, _ = three_blobs(seed=4)
        model = LloydKMeans(n_clusters=3, random_state=1).fit(X)
        for c in range(3):
            members = X[model.labels_ == c]
            assert np.allclose(model.cluster_centers_[c], members.mean(axis=0), atol=1e-12)

    def test_sizes_sum_to_n(self):
        X, _ = three_blobs(seed=5)
        model = LloydKMeans(n_clusters=3, random_state=0).fit(X)
        assert model.sizes_.sum() == len(X)

    def test_lloyd_monotone_inertia(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(200, 5))
        model = LloydKMeans(n_clusters=7, n_init=1, max_iter=100, tol=0.0,
                            random_state=0).fit(X)
        trace = model.inertia_trace_
        assert len(trace) >= 2
        assert np.all(np.diff(trace) <= 1e-9 * trace[0])

    def test_deterministic_for_fixed_seed(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(100, 3))
        a = LloydKMeans(n_clusters=5, n_init=10, random_state=3).fit(X)
        b = LloydKMeans(n_clusters=5, n_init=10, random_state=3).fit(X)
        assert np.array_equal(a.labels_, b.labels_)
        assert np.array_equal(a.cluster_centers_, b.cluster_centers_)
        assert a.inertia_ == b.inertia_

    def test_isometry_invariance(self):
        X, _ = three_blobs(seed=8)
        theta = 0.7
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        moved = X @ rot.T + np.array([3.0, -11.0])
        a = LloydKMeans(n_clusters=3, n_init=10, random_state=0).fit(X)
        b = LloydKMeans(n_clusters=3, n_init=10, random_state=0).fit(moved)
        assert np.isclose(a.inertia_, b.inertia_, rtol=1e-6)

    def test_random_init_supported(self):
        X, truth = three_blobs(seed=9)
        model = LloydKMeans(n_clusters=3, init="random", n_init=10, random_state=0).fit(X)
        assert match_accuracy(truth, model.labels_) == 1.0

    def test_k_larger_than_n_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            LloydKMeans(n_clusters=5).fit(np.zeros((3, 2)))

    def test_k_below_one_rejected(self):
        with pytest.raises(ValueError):
            LloydKMeans(n_clusters=0).fit(np.zeros((3, 2)))

    def test_nonfinite_rejected(self):
        X = np.zeros((5, 2))
        X[0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            LloydKMeans(n_clusters=2).fit(X)


class TestPredict:
    def test_centroid_maps_to_itself(self):
        X, _ = three_blobs(seed=10)
        model = LloydKMeans(n_clusters=3, random_state=0).fit(X)
        pred = model.predict(model.cluster_centers_)
        assert np.array_equal(pred, np.arange(3))

    def test_tie_breaks_to_lowest_index(self):
        model = LloydKMeans(n_clusters=6, random_state=0)
        model.cluster_centers_ = np.array(
            [[100.0], [50.0], [-1.0], [200.0], [300.0], [1.0]]
        )
        # point 0.0 is equidistant from centroids 2 (-1.0) and 5 (1.0)
        assert model.predict(np.array([[0.0]]))[0] == 2

    def test_matches_linear_scan(self):
        # oracle: brute-force nearest-centroid scan
        rng = np.random.default_rng(11)
        X = rng.normal(size=(50, 4))
        model = LloydKMeans(n_clusters=6, random_state=0).fit(X)
        queries = rng.normal(size=(40, 4))
        pred = model.predict(queries)
        for q, p in zip(queries, pred):
            dists = [np.sum((q - c) ** 2) for c in model.cluster_centers_]
            assert p == int(np.argmin(dists))

    def test_dimension_mismatch_rejected(self):
        X, _ = three_blobs(seed=12)
        model = LloydKMeans(n_clusters=3, random_state=0).fit(X)
        with pytest.raises(ValueError, match="columns"):
            model.predict(np.zeros((2, 5)))


class TestPermutationInvariance:
    def test_relabeling_preserves_inertia_and_silhouette(self):
        X, _ = three_blobs(seed=13)
        model = LloydKMeans(n_clusters=3, random_state=0).fit(X)
        labels = model.labels_
        perm = np.array([2, 0, 1])
        relabeled = perm[labels]
        inertia_orig = sum(
            ((X[labels == c] - X[labels == c].mean(axis=0)) ** 2).sum() for c in range(3)
        )
        inertia_perm = sum(
            ((X[relabeled == c] - X[relabeled == c].mean(axis=0)) ** 2).sum() for c in range(3)
        )
        assert np.isclose(inertia_orig, inertia_perm, rtol=1e-12)
        assert np.isclose(silhouette_score(X, labels), silhouette_score(X, relabeled), rtol=1e-12)


class TestElbow:
    def test_endpoints(self):
        rng = np.random.default_rng(14)
        X = rng.normal(size=(12, 2))
        curve = dict(elbow_curve(X, [1, 12], n_init=3, random_state=0))
        total_ss = ((X - X.mean(axis=0)) ** 2).sum()
        assert np.isclose(curve[1], total_ss, rtol=1e-9)
        assert curve[12] == 0.0

    def test_monotone_on_blobs(self):
        X, _ = three_blobs(per_blob=15, seed=15)
        curve = elbow_curve(X, range(1, 8), n_init=10, random_state=0)
        js = [j for _, j in curve]
        assert all(js[i + 1] <= js[i] + 1e-9 for i in range(len(js) - 1))

    def test_identical_points_zero_inertia(self):
        X = np.ones((10, 2))
        curve = elbow_curve(X, [1, 2, 3], n_init=2, random_state=0)
        assert all(j == 0.0 for _, j in curve)

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            elbow_curve(np.zeros((5, 2)), [])


class TestSilhouette:
    def test_two_tight_pairs(self):
        # hand-evaluated 4-point instance: pairs at distance 0.1 within,
        # ~10 across; a ~= 0.1, b ~= 10, s ~= 0.99
        X = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]])
        labels = np.array([0, 0, 1, 1])
        s = silhouette_samples(X, labels)
        a = 0.1
        b = (10.0 + 10.1) / 2
        expected_first = (b - a) / max(a, b)
        assert np.isclose(s[0], expected_first, rtol=1e-12)
        assert silhouette_score(X, labels) > 0.95

    def test_crosswise_clusters_negative(self):
        X = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]])
        labels = np.array([0, 1, 0, 1])  # deliberately wrong
        assert silhouette_score(X, labels) < 0

    def test_identical_points_score_zero(self):
        X = np.zeros((6, 2))
        labels = np.array([0, 0, 0, 1, 1, 1])
        assert silhouette_score(X, labels) == 0.0

    def test_singleton_contributes_zero(self):
        X = np.array([[0.0, 0.0], [1.0, 0.0], [1.1, 0.0]])
        labels = np.array([0, 1, 1])
        s = silhouette_samples(X, labels)
        assert s[0] == 0.0

    def test_range(self):
        rng = np.random.default_rng(16)
        X = rng.normal(size=(30, 3))
        labels = rng.integers(0, 3, size=30)
        if len(np.unique(labels)) < 2:
            labels[0] = (labels[0] + 1) % 3
        score = silhouette_score(X, labels)
        assert -1.0 <= score <= 1.0

    def test_single_cluster_rejected(self):
        with pytest.raises(ValueError, match="single cluster"):
            silhouette_score(np.zeros((5, 2)), np.zeros(5, dtype=int))


class TestModelSerialization:
    def test_json_round_trip(self, tmp_path):
        X, _ = three_blobs(seed=17)
        model = LloydKMeans(n_clusters=3, random_state=5).fit(X)
        path = tmp_path / "model.json"
        model.save_json(path)
        loaded = LloydKMeans.load_json(path)
        assert np.array_equal(loaded.cluster_centers_, model.cluster_centers_)
        assert loaded.inertia_ == model.inertia_
        assert np.array_equal(loaded.sizes_, model.sizes_)
        assert np.array_equal(loaded.predict(X), model.predict(X))

    def test_empty_cluster_repair(self):
        # force an empty cluster: k=3 with two coincident groups far apart
        X = np.array([[0.0, 0.0]] * 5 + [[10.0, 0.0]] * 5)
        model = LloydKMeans(n_clusters=3, n_init=5, random_state=0).fit(X)
        assert (model.sizes_ > 0).all()
