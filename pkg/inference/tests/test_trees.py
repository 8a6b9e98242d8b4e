"""
Tests for chi-square predictor ranking and the tree growers.
"""

import numpy as np
from django.test import SimpleTestCase

from inference.trees import (
    Tree,
    fit_regression_tree,
    fit_shallow_tree,
    quartile_codes,
    rank_predictors,
)

from .fixtures import xor_points


class PredictorRankingTest(SimpleTestCase):
    """
    Test cases for the chi-square interaction test.
    """

    def test_quartile_codes_cover_four_bins(self):
        """Test that quartile coding of 0..99 puts 25 values in each bin."""
        codes = quartile_codes(np.arange(100.0)[:, None])[:, 0]
        self.assertEqual(np.bincount(codes).tolist(), [25, 25, 25, 25])

    def test_informative_predictor_ranked_first(self):
        """Test that the predictor that determines the label wins the single tests."""
        rng = np.random.default_rng(1)
        X = rng.normal(size=(200, 5))
        y = (X[:, 3] > 0).astype(int)
        self.assertEqual(rank_predictors(X, y, 2)[0], 3)

    def test_pair_test_finds_interaction(self):
        """Test that an XOR pair moves one of its members ahead of noise predictors."""
        rng = np.random.default_rng(2)
        X = rng.uniform(-1, 1, size=(400, 6))
        y = ((X[:, 1] > 0) ^ (X[:, 4] > 0)).astype(int)
        self.assertIn(rank_predictors(X, y, 2)[0], (1, 4))

    def test_ranking_respects_candidate_subset(self):
        """Test that only candidate predictors are returned, as original indices."""
        rng = np.random.default_rng(3)
        X = rng.normal(size=(100, 6))
        y = (X[:, 5] > 0).astype(int)
        order = rank_predictors(X, y, 2, candidates=[0, 2, 5])
        self.assertEqual(sorted(order), [0, 2, 5])
        self.assertEqual(order[0], 5)


class ShallowTreeTest(SimpleTestCase):
    """
    Test cases for the weighted Gini tree.
    """

    def test_threshold_separable_needs_one_split(self):
        """Test that 1-D separable data is fit by a single split with no error."""
        X = np.linspace(0, 1, 20)[:, None]
        y = (X[:, 0] > 0.5).astype(int)
        tree = fit_shallow_tree(X, y, np.full(20, 1 / 20), 2)

        self.assertEqual(tree.n_splits, 1)
        np.testing.assert_array_equal(np.argmax(tree.predict_value(X), axis=1), y)

    def test_single_class_gives_single_leaf(self):
        """Test that all-same-label data produces a leaf predicting that label."""
        X = np.random.default_rng(0).normal(size=(10, 3))
        tree = fit_shallow_tree(X, np.ones(10, dtype=int), np.full(10, 0.1), 2)

        self.assertEqual(tree.n_splits, 0)
        self.assertEqual(int(np.argmax(tree.value[0])), 1)

    def test_xor_uses_several_splits(self):
        """Test that XOR needs at least two splits and beats chance on the weights."""
        X, y = xor_points(32)
        d = np.full(32, 1 / 32)
        tree = fit_shallow_tree(X, y, d, 2)

        self.assertGreaterEqual(tree.n_splits, 2)
        self.assertLessEqual(tree.n_splits, 5)
        wrong = np.argmax(tree.predict_value(X), axis=1) != y
        self.assertLess(d[wrong].sum(), 0.5)

    def test_split_budget_and_floor(self):
        """Test that noisy labels never exceed five splits and leaf probabilities stay floored."""
        rng = np.random.default_rng(4)
        X = rng.normal(size=(300, 8))
        y = rng.integers(0, 2, 300)
        tree = fit_shallow_tree(X, y, np.full(300, 1 / 300), 2, max_splits=5, floor=1e-3)

        self.assertLessEqual(tree.n_splits, 5)
        self.assertTrue(np.all(tree.value >= 1e-3 / (1 + 2e-3)))
        np.testing.assert_allclose(tree.value.sum(axis=1), 1.0)

    def test_single_split_lands_between_classes(self):
        """Test that a one-split tree cuts midway between the two label runs."""
        X = np.arange(10.0)[:, None]
        y = np.array([0, 0, 0, 1, 1, 1, 1, 1, 1, 1])
        tree = fit_shallow_tree(X, y, np.full(10, 0.1), 2, max_splits=1)
        self.assertAlmostEqual(tree.threshold[0], 2.5)

    def test_dict_round_trip_is_exact(self):
        """Test that serialized trees route and score exactly as before."""
        X, y = xor_points(32, seed=5)
        tree = fit_shallow_tree(X, y, np.full(32, 1 / 32), 2)
        again = Tree.from_dict(tree.to_dict())
        np.testing.assert_array_equal(again.predict_value(X), tree.predict_value(X))


class RegressionTreeTest(SimpleTestCase):
    """
    Test cases for the forest's regression tree.
    """

    def test_leaves_hold_min_leaf_rows(self):
        """Test that every leaf keeps at least min_leaf training rows."""
        rng = np.random.default_rng(6)
        X = rng.normal(size=(120, 4))
        y = X[:, 0] * 2 + rng.normal(scale=0.1, size=120)
        tree = fit_regression_tree(X, y, np.random.default_rng(0), min_leaf=10)

        counts = np.bincount(tree.apply(X), minlength=tree.feature.size)
        leaves = np.flatnonzero(tree.feature < 0)
        self.assertGreater(leaves.size, 1)
        self.assertTrue(np.all(counts[leaves] >= 10))

    def test_step_response_split_on_step_feature(self):
        """Test that a step in x0 is split on x0 near the step."""
        rng = np.random.default_rng(7)
        X = rng.uniform(0, 1, size=(200, 3))
        y = (X[:, 0] > 0.5).astype(float)
        tree = fit_regression_tree(X, y, np.random.default_rng(0), min_leaf=10)

        self.assertEqual(tree.feature[0], 0)
        self.assertAlmostEqual(tree.threshold[0], 0.5, delta=0.05)

    def test_constant_response_is_one_leaf(self):
        """Test that a flat response is never split."""
        X = np.random.default_rng(8).normal(size=(50, 2))
        tree = fit_regression_tree(X, np.full(50, 3.0), np.random.default_rng(0))
        self.assertEqual(tree.n_splits, 0)
        self.assertEqual(tree.value[0, 0], 3.0)
