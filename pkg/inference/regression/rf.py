"""
Bagged regression trees with out-of-bag permutation importance.
"""

import logging
import math

import numpy as np

from ..trees import Tree, fit_regression_tree
from .base import Regressor, Standardizer, check_training_data

logger = logging.getLogger(__name__)


class RfModel(Regressor):
    kind = 'rf'

    def __init__(self, standardizer, trees, oob_indices, importance, min_leaf):
        super().__init__(standardizer)
        self.trees = trees
        self.oob_indices = oob_indices
        self.importance = np.asarray(importance, dtype=float)
        self.min_leaf = int(min_leaf)

    def tree_predictions(self, Z):
        return np.vstack([tree.predict_value(Z)[:, 0] for tree in self.trees])

    def _predict(self, Z):
        return self.tree_predictions(Z).mean(axis=0)

    def raw_feature_weights(self):
        return self.importance

    def _params(self):
        return {
            'min_leaf': self.min_leaf,
            'trees': [tree.to_dict() for tree in self.trees],
            'oob_indices': [idx.tolist() for idx in self.oob_indices],
            'importance': self.importance.tolist(),
        }

    @classmethod
    def _from_params(cls, standardizer, params):
        return cls(
            standardizer,
            trees=[Tree.from_dict(t) for t in params['trees']],
            oob_indices=[np.asarray(idx, dtype=np.int64) for idx in params['oob_indices']],
            importance=params['importance'],
            min_leaf=params['min_leaf'],
        )


def oob_permutation_importance(trees, oob_indices, Z, y, rng):
    """
    Mean over trees of the increase in out-of-bag MSE when one predictor is permuted.

    Trees without out-of-bag rows are skipped; the result is clamped at zero.
    """
    d = Z.shape[1]
    total = np.zeros(d)
    used = 0
    for tree, oob in zip(trees, oob_indices):
        if oob.size == 0:
            continue
        Z_oob, y_oob = Z[oob], y[oob]
        base = np.mean((tree.predict_value(Z_oob)[:, 0] - y_oob) ** 2)
        for r in range(d):
            shuffled = Z_oob.copy()
            shuffled[:, r] = rng.permutation(shuffled[:, r])
            total[r] += np.mean((tree.predict_value(shuffled)[:, 0] - y_oob) ** 2) - base
        used += 1
    if used == 0:
        return np.zeros(d)
    return np.maximum(total / used, 0.0)


def fit_rf(X, y, rng, oob_rng, n_trees=200, min_leaf=10, min_samples=20):
    """
    Forest of ``n_trees`` trees on N-of-N bootstrap samples.

    ``rng`` drives bootstraps and predictor subsets, ``oob_rng`` the permutations.
    """
    X, y = check_training_data(X, y, min_samples, 'rf')
    standardizer = Standardizer.fit(X)
    Z = standardizer.transform(X)
    n, d = Z.shape
    n_candidates = math.ceil(d / 3)

    trees, oob_indices = [], []
    for _ in range(n_trees):
        sample = rng.integers(0, n, size=n)
        in_bag = np.zeros(n, dtype=bool)
        in_bag[sample] = True
        trees.append(fit_regression_tree(Z[sample], y[sample], rng, min_leaf=min_leaf, n_candidates=n_candidates))
        oob_indices.append(np.flatnonzero(~in_bag))

    importance = oob_permutation_importance(trees, oob_indices, Z, y, oob_rng)
    logger.debug(f"Forest of {n_trees} trees on {n} rows, top predictor {int(np.argmax(importance))}")
    return RfModel(standardizer, trees, oob_indices, importance, min_leaf)
