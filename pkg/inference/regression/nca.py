"""
Neighborhood component analysis for regression.

Distances are D_w(a, b) = sum_r w_r^2 |a_r - b_r| on standardized features; a
point's neighbors are drawn with probability proportional to exp(-D_w). Weights
minimize the expected absolute error of leave-one-out neighbor prediction plus an
L2 penalty, by L-BFGS with the analytic gradient.

Only n x n matrices are held in memory; per-feature distances are rebuilt one
feature at a time for the gradient.
"""

import logging

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .base import Regressor, Standardizer, check_training_data

logger = logging.getLogger(__name__)


def weighted_l1(Za, Zb, w):
    """sum_r w_r^2 |a_r - b_r| for every row pair."""
    scale = np.asarray(w, dtype=float) ** 2
    return cdist(Za * scale, Zb * scale, metric='cityblock')


def neighbor_probabilities(w, Za, Zb=None):
    """
    Row-stochastic neighbor probabilities of rows of ``Za`` over rows of ``Zb``.

    Without ``Zb`` the rows of ``Za`` are their own candidates and self-pairs are excluded.
    """
    exclude_self = Zb is None
    logits = -weighted_l1(Za, Za if Zb is None else Zb, w)
    if exclude_self:
        np.fill_diagonal(logits, -np.inf)
    return np.exp(logits - logsumexp(logits, axis=1, keepdims=True))


def nca_loss(w, Z, y, lam):
    """Regularized leave-one-out expected absolute error and its gradient in ``w``."""
    n, d = Z.shape
    P = neighbor_probabilities(w, Z)
    losses = np.abs(y[:, None] - y[None, :])
    PL = P * losses
    per_row = PL.sum(axis=1)
    value = per_row.sum() / n + lam * w @ w

    grad = np.empty(d)
    for r in range(d):
        column = Z[:, r:r + 1]
        D_r = cdist(column, column, metric='cityblock')
        expected = (P * D_r).sum(axis=1)
        grad[r] = per_row @ expected - np.sum(PL * D_r)
    grad = (2.0 * w / n) * grad + 2.0 * lam * w
    return value, grad


class NcaModel(Regressor):
    kind = 'nca'

    def __init__(self, standardizer, weights, lam, Z_train, y_train, hard=False):
        super().__init__(standardizer)
        self.weights = np.asarray(weights, dtype=float)
        self.lam = float(lam)
        self.Z_train = np.asarray(Z_train, dtype=float)
        self.y_train = np.asarray(y_train, dtype=float)
        self.hard = bool(hard)

    def _predict(self, Z):
        P = neighbor_probabilities(self.weights, Z, self.Z_train)
        if self.hard:
            return self.y_train[np.argmax(P, axis=1)]
        return P @ self.y_train

    def raw_feature_weights(self):
        return self.weights ** 2

    def _params(self):
        return {
            'weights': self.weights.tolist(),
            'lambda': self.lam,
            'Z_train': self.Z_train.tolist(),
            'y_train': self.y_train.tolist(),
            'hard': self.hard,
        }

    @classmethod
    def _from_params(cls, standardizer, params):
        return cls(
            standardizer, params['weights'], params['lambda'],
            params['Z_train'], params['y_train'], params.get('hard', False),
        )


def fit_nca(X, y, lam=None, hard=False, max_iter=500, min_samples=5):
    """Learn feature weights starting from all ones; ``lam`` defaults to 1/n."""
    X, y = check_training_data(X, y, min_samples, 'nca')
    lam = 1.0 / y.size if lam is None else float(lam)
    standardizer = Standardizer.fit(X)
    Z = standardizer.transform(X)

    result = minimize(
        nca_loss, np.ones(Z.shape[1]), args=(Z, y, lam),
        jac=True, method='L-BFGS-B', options={'maxiter': max_iter},
    )
    if not result.success:
        logger.warning(f"NCA optimizer stopped early: {result.message}")
    return NcaModel(standardizer, result.x, lam, Z, y, hard)
