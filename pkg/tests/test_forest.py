import json

import numpy as np
import pytest

from oracles import exhaustive_split, tree_route
from overlay_advisor.errors import ParseError, ValidationError
from overlay_advisor.forest import (
    ForestConfig,
    RandomForest,
    RegressionTree,
    best_split,
    train_forest,
    train_tree,
)
from overlay_advisor.rng import SplitMix64


def noisy_dataset(rng, n=100, d=2):
    X = rng.uniform(0, 10, size=(n, d))
    y = 3 * X[:, 0] - X[:, -1] ** 2 + rng.normal(0, 1, n)
    return X, y


class TestBestSplit:
    def test_step(self):
        s = best_split(np.array([[1.0], [2], [3], [4]]), np.array([0.0, 0, 10, 10]), [0])
        assert (s.feature, s.threshold) == (0, 2.5)
        assert s.score == 0

    def test_step_matches_oracle(self):
        X, y = np.array([[1.0], [2], [3], [4]]), np.array([0.0, 0, 10, 10])
        assert exhaustive_split(X, y, [0])[:2] == (0, 2.5)

    def test_constant_target(self):
        assert best_split(np.arange(5.0).reshape(-1, 1), np.full(5, 7.0), [0]) is None

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            best_split(np.zeros((3, 1)), np.zeros(2), [0])

    def test_min_samples_leaf(self):
        X = np.arange(6.0).reshape(-1, 1)
        y = np.array([100.0, 0, 0, 0, 0, 0])
        assert best_split(X, y, [0], 1).threshold == 0.5
        assert best_split(X, y, [0], 2).threshold == 1.5
        assert best_split(X, y, [0], 4) is None

    def test_no_distinct_values(self):
        assert best_split(np.ones((4, 2)), np.array([1.0, 2, 3, 4]), [0, 1]) is None

    def test_tie_prefers_lower_feature(self):
        X = np.array([[1.0, 1.0], [2, 2], [3, 3], [4, 4]])
        assert best_split(X, np.array([0.0, 0, 1, 1]), [1, 0]).feature == 0

    def test_tie_prefers_lower_threshold(self):
        # splits at 1.5 and 2.5 both isolate a single 5 from a symmetric rest
        X = np.array([[1.0], [2], [3]])
        s = best_split(X, np.array([0.0, 5, 0]), [0])
        assert s.threshold == 1.5

    def test_30_random_samples_match_oracle(self, rng):
        X = np.round(rng.uniform(0, 5, size=(30, 3)), 1)
        y = rng.normal(size=30)
        s = best_split(X, y, [0, 1, 2])
        ref = exhaustive_split(X, y, [0, 1, 2])
        assert (s.feature, s.threshold) == ref[:2]
        assert s.score == pytest.approx(ref[2], rel=1e-9)


class TestTrainTree:
    def test_single_sample(self):
        t = train_tree(np.array([[5.0]]), np.array([7.0]), ForestConfig(bootstrap=False))
        assert t.node_count == 1 and t.predict(np.array([[0.0]]))[0] == 7

    def test_exact_fit(self, rng):
        X = rng.permutation(200).reshape(-1, 1).astype(float)
        y = rng.normal(size=200)
        t = train_tree(X, y, ForestConfig(bootstrap=False))
        assert np.array_equal(t.predict(X), y)

    def test_depth_zero(self, rng):
        X, y = noisy_dataset(rng)
        t = train_tree(X, y, ForestConfig(max_depth=0))
        assert t.node_count == 1
        assert t.value[0] == pytest.approx(y.mean(), rel=1e-12)

    def test_empty(self):
        with pytest.raises(ValidationError):
            train_tree(np.zeros((0, 1)), np.zeros(0), ForestConfig())

    def test_leaf_means_and_counts(self, rng):
        X, y = noisy_dataset(rng, 60)
        t = train_tree(X, y, ForestConfig(min_samples_leaf=5))
        leaves = t.apply(X)
        for leaf in np.unique(leaves):
            routed = y[leaves == leaf]
            assert t.value[leaf] == pytest.approx(routed.mean(), rel=1e-12, abs=1e-12)
            assert t.n_samples[leaf] == len(routed) >= 5

    def test_structure_is_a_tree(self, rng):
        X, y = noisy_dataset(rng, 80)
        t = train_tree(X, y, ForestConfig())
        children = [c for k in range(t.node_count) if t.feature[k] >= 0
                    for c in (t.left[k], t.right[k])]
        assert sorted(children) == list(range(1, t.node_count))  # every non-root has one parent

    def test_permutation_invariance(self, rng):
        X, y = noisy_dataset(rng, 50)
        perm = rng.permutation(50)
        cfg = ForestConfig(bootstrap=False)
        a, b = train_tree(X, y, cfg), train_tree(X[perm], y[perm], cfg)
        probe = rng.uniform(-1, 11, size=(500, 2))
        assert np.array_equal(a.predict(probe), b.predict(probe))

    def test_feature_subsampling_is_seeded(self, rng):
        X, y = noisy_dataset(rng, 50, d=4)
        cfg = ForestConfig(feature_fraction=0.5)
        a = train_tree(X, y, cfg, SplitMix64(1))
        b = train_tree(X, y, cfg, SplitMix64(1))
        assert np.array_equal(a.feature, b.feature) and np.array_equal(a.threshold, b.threshold)


class TestForest:
    def test_no_bootstrap_trees_identical(self, rng):
        X, y = noisy_dataset(rng)
        f = train_forest(X, y, ForestConfig(n_trees=5, bootstrap=False))
        first = json.dumps(f.trees[0].to_dict())
        assert all(json.dumps(t.to_dict()) == first for t in f.trees)

    def test_same_seed_same_bytes(self, rng):
        X, y = noisy_dataset(rng)
        cfg = ForestConfig(n_trees=10, seed=7)
        assert train_forest(X, y, cfg).dumps() == train_forest(X, y, cfg).dumps()

    def test_adjacent_seeds_differ(self, rng):
        X, y = noisy_dataset(rng)
        a = train_forest(X, y, ForestConfig(n_trees=10, seed=7))
        b = train_forest(X, y, ForestConfig(n_trees=10, seed=8))
        assert a.dumps() != b.dumps()

    def test_parallel_equals_sequential(self, rng):
        X, y = noisy_dataset(rng)
        cfg = ForestConfig(n_trees=12, seed=3, feature_fraction=0.5)
        assert train_forest(X, y, cfg, n_jobs=4).dumps() == train_forest(X, y, cfg).dumps()

    def test_mean_of_three(self):
        trees = [RegressionTree([-1], [0.0], [-1], [-1], [v], [1]) for v in (2.0, 4.0, 6.0)]
        f = RandomForest(trees, ForestConfig(n_trees=3), ["x"], "y")
        assert f.predict([0.0]) == 4.0

    def test_constant_targets(self, rng):
        X = rng.uniform(size=(40, 2))
        f = train_forest(X, np.full(40, 3.25), ForestConfig(n_trees=20))
        assert np.all(f.predict_batch(rng.uniform(-5, 5, size=(100, 2))) == 3.25)

    def test_prediction_is_mean_of_trees(self, rng):
        X, y = noisy_dataset(rng)
        f = train_forest(X, y, ForestConfig(n_trees=25))
        for x in rng.uniform(-2, 12, size=(50, 2)):
            assert f.predict(x) == pytest.approx(np.mean([tree_route(t, x) for t in f.trees]), rel=1e-12)

    def test_batch(self, rng):
        X, y = noisy_dataset(rng)
        f = train_forest(X, y, ForestConfig(n_trees=10))
        assert f.predict_batch(np.zeros((0, 2))).shape == (0,)
        row = X[:1]
        assert f.predict_batch(row).tolist() == [f.predict(row[0])]
        probe = rng.uniform(0, 10, size=(100, 2))
        assert f.predict_batch(probe).tolist() == [f.predict(x) for x in probe]

    def test_dimension_mismatch(self, rng):
        X, y = noisy_dataset(rng)
        f = train_forest(X, y, ForestConfig(n_trees=2))
        with pytest.raises(ValidationError):
            f.predict([1.0, 2.0, 3.0])
        with pytest.raises(ValidationError):
            f.predict_batch(np.zeros((4, 1)))

    def test_bounded_by_training_targets(self, rng):
        X, y = noisy_dataset(rng)
        f = train_forest(X, y, ForestConfig(n_trees=20))
        p = f.predict_batch(rng.uniform(-100, 100, size=(500, 2)))
        assert p.min() >= y.min() and p.max() <= y.max()

    def test_serialization_round_trip(self, rng):
        X, y = noisy_dataset(rng)
        f = train_forest(X, y, ForestConfig(n_trees=15, max_depth=6, feature_fraction=0.5))
        g = RandomForest.loads(f.dumps())
        probe = rng.uniform(-1, 11, size=(1000, 2))
        assert np.array_equal(f.predict_batch(probe), g.predict_batch(probe))
        assert g.config == f.config and g.dumps() == f.dumps()

    def test_bad_documents(self):
        with pytest.raises(ParseError):
            RandomForest.loads('{"format_version": 99}')
        with pytest.raises(ParseError):
            RandomForest.loads('{"format_version": 1, "config": {}, "trees": [{"feature": 0}],'
                               ' "feature_names": ["x"], "target_name": "y"}')

    @pytest.mark.parametrize("kwargs", [
        {"n_trees": 0}, {"min_samples_leaf": 0}, {"min_samples_split": 1},
        {"feature_fraction": 0.0}, {"feature_fraction": 1.5}, {"max_depth": -1}, {"seed": -1},
    ])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValidationError):
            ForestConfig(**kwargs)
