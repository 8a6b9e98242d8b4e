"""
Context classifier: totally corrective boosting of shallow trees on IMU features.

Each context gets a one-vs-all binary run. A run keeps every weak hypothesis it has
seen and, after each new one, moves the sample distribution to the point of minimum
relative entropy to the uniform start that keeps every stored hypothesis's edge at or
below the best edge seen so far minus the margin precision. Final hypothesis weights
come from the margin-maximizing linear program. Posteriors are the softmax over
contexts of the weighted leaf log-odds.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp, softmax

from .exceptions import DegenerateData, InsufficientData, UntrainedModel
from .trees import Tree, fit_shallow_tree

logger = logging.getLogger(__name__)

MAX_SPLITS = 5
LEAF_FLOOR = 1e-3
PROJECTION_TOL = 1e-8
PROJECTION_MAX_PASSES = 10_000


def train_tree(X, y, d, n_labels=2):
    """Weighted shallow tree on integer labels ``y`` in ``range(n_labels)``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    d = np.asarray(d, dtype=float)
    if X.ndim != 2 or not (X.shape[0] == y.size == d.size) or X.shape[0] == 0:
        raise DegenerateData(f"Inconsistent training shapes {X.shape}, {y.shape}, {d.shape}")
    if not np.all(np.isfinite(X)):
        raise DegenerateData("Feature matrix holds non-finite values")
    if np.any(d < 0) or d.sum() <= 0:
        raise DegenerateData("Sample weights must be non-negative with positive mass")
    return fit_shallow_tree(X, y, d / d.sum(), n_labels, max_splits=MAX_SPLITS, floor=LEAF_FLOOR)


def leaf_log_odds(tree, X):
    """log p(positive) / p(negative) at the leaf each row falls into."""
    p = tree.predict_value(X)
    return np.log(p[:, 1]) - np.log(p[:, 0])


def _hypothesis(tree, X):
    return np.where(leaf_log_odds(tree, X) >= 0, 1.0, -1.0)


def is_feasible(edges, threshold):
    """Whether some distribution keeps every row of ``edges`` (hypotheses x samples) at or below ``threshold``."""
    n = edges.shape[1]
    result = linprog(
        np.zeros(n),
        A_ub=edges,
        b_ub=np.full(edges.shape[0], threshold),
        A_eq=np.ones((1, n)),
        b_eq=[1.0],
        bounds=[(0, None)] * n,
        method='highs',
    )
    return result.status == 0


def project_distribution(log_d0, edges, threshold, tol=PROJECTION_TOL, max_passes=PROJECTION_MAX_PASSES):
    """
    Relative-entropy projection of ``exp(log_d0)`` onto {d : edges @ d <= threshold}.

    Cyclic dual coordinate ascent over the half-space constraints. ``edges`` holds
    +/-1 entries, so each coordinate step has a closed form.
    Returns the projected distribution and the number of passes used.
    """
    n_constraints = edges.shape[0]
    dual = np.zeros(n_constraints)
    log_d = log_d0 - logsumexp(log_d0)
    positive = edges > 0
    c = threshold

    for n_pass in range(1, max_passes + 1):
        largest = 0.0
        for q in range(n_constraints):
            d = np.exp(log_d)
            w_plus = d[positive[q]].sum()
            w_minus = d[~positive[q]].sum()
            if w_plus <= 0:
                step = -np.inf
            elif w_minus <= 0 or c >= 1.0:
                step = 0.0 if c >= 1.0 else np.inf
            elif c <= -1.0:
                step = np.inf
            else:
                step = 0.5 * (np.log(w_plus * (1.0 - c)) - np.log(w_minus * (1.0 + c)))
            step = max(step, -dual[q])
            if not np.isfinite(step):
                continue
            if step != 0.0:
                dual[q] += step
                log_d = log_d - step * edges[q]
                log_d -= logsumexp(log_d)
            largest = max(largest, abs(step))
        if largest < tol:
            return np.exp(log_d), n_pass
    logger.warning(f"Entropy projection stopped at the {max_passes}-pass cap")
    return np.exp(log_d), max_passes


def max_margin_weights(edges):
    """
    Hypothesis weights on the simplex maximizing the minimum sample margin.

    ``edges`` is hypotheses x samples of y_i * h_q(x_i). Returns (weights, margin).
    """
    n_hyp, n = edges.shape
    cost = np.zeros(n_hyp + 1)
    cost[-1] = -1.0
    A_ub = np.hstack([-edges.T, np.ones((n, 1))])
    A_eq = np.hstack([np.ones((1, n_hyp)), np.zeros((1, 1))])
    result = linprog(
        cost,
        A_ub=A_ub,
        b_ub=np.zeros(n),
        A_eq=A_eq,
        b_eq=[1.0],
        bounds=[(0, None)] * n_hyp + [(None, None)],
        method='highs',
    )
    if result.status != 0:
        weights = np.full(n_hyp, 1.0 / n_hyp)
        return weights, float((weights @ edges).min())
    weights = np.maximum(result.x[:n_hyp], 0.0)
    weights /= weights.sum()
    return weights, float(result.x[-1])


@dataclass
class BinaryBoost:
    """One-vs-all run: trees with their margin weights."""

    trees: List[Tree]
    tree_weights: np.ndarray
    history: List[dict] = field(default_factory=list)

    def score(self, X):
        total = np.zeros(np.asarray(X).shape[0])
        for tree, weight in zip(self.trees, self.tree_weights):
            if weight > 0:
                total += weight * leaf_log_odds(tree, X)
        return total

    def to_dict(self):
        return {
            'trees': [tree.to_dict() for tree in self.trees],
            'tree_weights': self.tree_weights.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            trees=[Tree.from_dict(t) for t in data['trees']],
            tree_weights=np.asarray(data['tree_weights'], dtype=float),
        )


def boost_binary(X, positive, max_iter=200, v=0.01, record_history=False):
    """
    Binary totally corrective boosting with labels ``positive`` (bool per row).
    """
    n = X.shape[0]
    labels = positive.astype(np.int64)
    signs = np.where(positive, 1.0, -1.0)
    log_d0 = np.full(n, -np.log(n))
    d = np.exp(log_d0)
    gamma_hat = 1.0

    trees, edge_rows, history = [], [], []
    stop_reason = 'max_iter'
    for iteration in range(max_iter):
        tree = train_tree(X, labels, d)
        u = signs * _hypothesis(tree, X)
        edge = float(d @ u)
        trees.append(tree)
        edge_rows.append(u)

        if edge < v:
            stop_reason = f"edge {edge:.4f} below margin precision"
            break
        gamma_hat = min(gamma_hat, edge)
        threshold = gamma_hat - v
        edges = np.vstack(edge_rows)
        if not is_feasible(edges, threshold):
            stop_reason = "edge constraints infeasible"
            break

        d, passes = project_distribution(log_d0, edges, threshold)
        if record_history:
            _, margin = max_margin_weights(edges)
            history.append({
                'iteration': iteration,
                'edge': edge,
                'gamma_hat': gamma_hat,
                'threshold': threshold,
                'max_stored_edge': float((edges @ d).max()),
                'd_sum': float(d.sum()),
                'd_min': float(d.min()),
                'margin': margin,
                'passes': passes,
            })

    weights, margin = max_margin_weights(np.vstack(edge_rows))
    logger.debug(f"Binary run stopped after {len(trees)} trees ({stop_reason}), margin {margin:.4f}")
    return BinaryBoost(trees=trees, tree_weights=weights, history=history)


@dataclass
class TotalBoostEnsemble:
    """One binary run per context, in ``classes`` order."""

    classes: Tuple[str, ...]
    members: List[BinaryBoost]

    @property
    def n_trees(self):
        return sum(len(m.trees) for m in self.members)

    def scores(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([m.score(X) for m in self.members])

    def predict_posterior(self, X):
        return predict_posterior(self, X)

    def predict(self, X):
        posterior = predict_posterior(self, X)
        return [self.classes[i] for i in np.argmax(posterior, axis=1)]

    def to_dict(self):
        return {'classes': list(self.classes), 'members': [m.to_dict() for m in self.members]}

    @classmethod
    def from_dict(cls, data):
        return cls(
            classes=tuple(data['classes']),
            members=[BinaryBoost.from_dict(m) for m in data['members']],
        )


def totalboost_train(X, y, classes=None, max_iter=200, v=0.01, record_history=False):
    """
    Train the one-vs-all TotalBoost ensemble on feature rows ``X`` and labels ``y``.

    ``classes`` fixes the context order; by default it is the sorted set of labels.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=object)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DegenerateData(f"Feature rows ({X.shape}) and labels ({y.size}) disagree")
    classes = tuple(sorted(set(y.tolist()))) if classes is None else tuple(classes)
    if len(classes) < 2:
        raise InsufficientData("Context classification needs at least two classes")
    counts = {c: int(np.sum(y == c)) for c in classes}
    short = [c for c, k in counts.items() if k < 2]
    if short:
        raise InsufficientData(f"Classes with fewer than two samples: {', '.join(short)}")
    unknown = set(y.tolist()) - set(classes)
    if unknown:
        raise InsufficientData(f"Labels outside the class set: {', '.join(sorted(map(str, unknown)))}")

    members = []
    for label in classes:
        members.append(boost_binary(X, y == label, max_iter=max_iter, v=v, record_history=record_history))
    ensemble = TotalBoostEnsemble(classes=classes, members=members)
    logger.info(f"Context classifier trained on {X.shape[0]} instances: {ensemble.n_trees} trees over {len(classes)} contexts")
    return ensemble


def predict_posterior(ens: Optional[TotalBoostEnsemble], X):
    """Posterior over ``ens.classes`` for each row of ``X`` (a single vector gives one row)."""
    if ens is None or not ens.members or any(not m.trees for m in ens.members):
        raise UntrainedModel("Context classifier has not been trained")
    return softmax(ens.scores(X), axis=1)
