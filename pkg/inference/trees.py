"""
Decision trees used by the context classifier and the random forest.

Split predictors are chosen by chi-square independence tests between the
quartile-binned predictor and the (class or quartile-binned) response, plus
tests on pairs of the strongest predictors. The split threshold on the chosen
predictor then minimizes weighted Gini impurity (classification) or the sum of
squared errors (regression).
"""

import heapq
import logging
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import stats

logger = logging.getLogger(__name__)

N_BINS = 4
PAIR_CANDIDATES = 10


def quartile_codes(X):
    """Per-column quartile index 0..3 of every value."""
    X = np.asarray(X, dtype=float)
    edges = np.percentile(X, [25, 50, 75], axis=0)
    codes = np.empty(X.shape, dtype=np.int64)
    for j in range(X.shape[1]):
        codes[:, j] = np.searchsorted(edges[:, j], X[:, j], side='right')
    return codes


def _chi_square_logp(table):
    """log p-value of the independence test on contingency tables of shape (m, r, c)."""
    total = table.sum(axis=(1, 2), keepdims=True)
    rows = table.sum(axis=2, keepdims=True)
    cols = table.sum(axis=1, keepdims=True)
    with np.errstate(invalid='ignore', divide='ignore'):
        expected = rows * cols / np.where(total > 0, total, 1.0)
        terms = np.where(expected > 0, (table - expected) ** 2 / np.where(expected > 0, expected, 1.0), 0.0)
    statistic = terms.sum(axis=(1, 2))
    n_rows = (rows[:, :, 0] > 0).sum(axis=1)
    n_cols = (cols[:, 0, :] > 0).sum(axis=1)
    dof = (n_rows - 1) * (n_cols - 1)
    logp = np.zeros(table.shape[0])
    ok = dof > 0
    logp[ok] = stats.chi2.logsf(statistic[ok], dof[ok])
    return logp


def _tables(codes, n_cells, labels, n_labels, weights):
    """Weighted contingency tables (features x cells x labels), scaled to the sample count."""
    n, m = codes.shape
    scaled = weights * (n / weights.sum()) if weights.sum() > 0 else np.ones(n)
    flat = (np.arange(m)[None, :] * n_cells + codes) * n_labels + labels[:, None]
    counts = np.bincount(flat.ravel(), weights=np.repeat(scaled, m), minlength=m * n_cells * n_labels)
    return counts.reshape(m, n_cells, n_labels)


def rank_predictors(X, labels, n_labels, weights=None, candidates=None, pair_top=PAIR_CANDIDATES):
    """
    Predictor indices ordered by chi-square evidence, strongest first.

    When a pair test beats every single test, the member of that pair with the
    smaller single p-value moves to the front.
    """
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    weights = np.ones(len(labels)) if weights is None else np.asarray(weights, dtype=float)
    candidates = np.arange(X.shape[1]) if candidates is None else np.asarray(candidates)

    codes = quartile_codes(X[:, candidates])
    single = _chi_square_logp(_tables(codes, N_BINS, labels, n_labels, weights))
    order = list(np.lexsort((candidates, single)))

    top = order[:pair_top]
    if len(top) >= 2:
        pairs = list(combinations(sorted(top), 2))
        joint = np.column_stack([codes[:, a] * N_BINS + codes[:, b] for a, b in pairs])
        pair_logp = _chi_square_logp(_tables(joint, N_BINS * N_BINS, labels, n_labels, weights))
        best = int(np.argmin(pair_logp))
        if pair_logp[best] < single[order[0]]:
            a, b = pairs[best]
            winner = a if single[a] <= single[b] else b
            order.remove(winner)
            order.insert(0, winner)
    return [int(candidates[i]) for i in order]


@dataclass
class Tree:
    """Binary tree in array form; ``value`` rows hold leaf outputs."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_splits(self):
        return int(np.count_nonzero(self.feature >= 0))

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while np.any(active):
            idx = np.flatnonzero(active)
            f = self.feature[node[idx]]
            go_left = X[idx, f] <= self.threshold[node[idx]]
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])
            active = self.feature[node] >= 0
        return node

    def predict_value(self, X):
        return self.value[self.apply(X)]

    def to_dict(self):
        return {
            'feature': self.feature.tolist(),
            'threshold': self.threshold.tolist(),
            'left': self.left.tolist(),
            'right': self.right.tolist(),
            'value': self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            feature=np.asarray(data['feature'], dtype=np.int64),
            threshold=np.asarray(data['threshold'], dtype=float),
            left=np.asarray(data['left'], dtype=np.int64),
            right=np.asarray(data['right'], dtype=np.int64),
            value=np.asarray(data['value'], dtype=float),
        )


class _Builder:
    def __init__(self):
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []

    def add_leaf(self, value):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(np.asarray(value, dtype=float))
        return len(self.feature) - 1

    def split(self, node, feature, threshold, left_value, right_value):
        left = self.add_leaf(left_value)
        right = self.add_leaf(right_value)
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = left
        self.right[node] = right
        return left, right

    def build(self):
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=np.vstack(self.value),
        )


def _gini_threshold(x, labels, weights, n_labels):
    """
    Best Gini threshold on one predictor.

    Returns (impurity decrease, threshold) or None when ``x`` is constant.
    Equal impurities resolve toward the most balanced split.
    """
    order = np.argsort(x, kind='mergesort')
    xs, ys, ws = x[order], labels[order], weights[order]
    valid = np.flatnonzero(xs[1:] > xs[:-1])
    if valid.size == 0:
        return None

    onehot = np.zeros((xs.size, n_labels))
    onehot[np.arange(xs.size), ys] = ws
    left = np.cumsum(onehot, axis=0)[valid]
    total = onehot.sum(axis=0)
    right = total - left
    w_left = left.sum(axis=1)
    w_right = right.sum(axis=1)
    w_all = total.sum()

    with np.errstate(invalid='ignore', divide='ignore'):
        g_left = w_left - np.where(w_left > 0, (left ** 2).sum(axis=1) / np.where(w_left > 0, w_left, 1), 0)
        g_right = w_right - np.where(w_right > 0, (right ** 2).sum(axis=1) / np.where(w_right > 0, w_right, 1), 0)
    impurity = g_left + g_right
    parent = w_all - (total ** 2).sum() / w_all if w_all > 0 else 0.0

    best = impurity.min()
    tied = np.flatnonzero(impurity <= best + 1e-12 * max(1.0, abs(best)))
    pick = tied[np.argmin(np.abs(w_left[tied] - w_right[tied]))]
    cut = valid[pick]
    return parent - impurity[pick], 0.5 * (xs[cut] + xs[cut + 1])


def _class_probabilities(labels, weights, n_labels, floor):
    mass = np.bincount(labels, weights=weights, minlength=n_labels)
    total = mass.sum()
    p = mass / total if total > 0 else np.full(n_labels, 1.0 / n_labels)
    p = np.maximum(p, floor)
    return p / p.sum()


def fit_shallow_tree(X, labels, weights, n_labels, max_splits=5, floor=1e-3):
    """
    Weighted classification tree grown best-first up to ``max_splits`` splits.

    Leaves hold floored class probabilities. Pure nodes are never split.
    """
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    weights = np.asarray(weights, dtype=float)
    builder = _Builder()
    root = builder.add_leaf(_class_probabilities(labels, weights, n_labels, floor))

    def candidate(idx):
        node_labels = labels[idx]
        node_weights = weights[idx]
        present = np.bincount(node_labels, weights=node_weights, minlength=n_labels) > 0
        if present.sum() < 2 or idx.size < 2:
            return None
        for feature in rank_predictors(X[idx], node_labels, n_labels, node_weights):
            found = _gini_threshold(X[idx, feature], node_labels, node_weights, n_labels)
            if found is not None:
                return found[0], feature, found[1]
        return None

    heap = []
    counter = 0
    all_idx = np.arange(X.shape[0])
    first = candidate(all_idx)
    if first is not None:
        heapq.heappush(heap, (-first[0], counter, root, all_idx, first[1], first[2]))

    splits = 0
    while heap and splits < max_splits:
        _, _, node, idx, feature, threshold = heapq.heappop(heap)
        go_left = X[idx, feature] <= threshold
        left_idx, right_idx = idx[go_left], idx[~go_left]
        left, right = builder.split(
            node, feature, threshold,
            _class_probabilities(labels[left_idx], weights[left_idx], n_labels, floor),
            _class_probabilities(labels[right_idx], weights[right_idx], n_labels, floor),
        )
        splits += 1
        for child, child_idx in ((left, left_idx), (right, right_idx)):
            found = candidate(child_idx)
            if found is not None:
                counter += 1
                heapq.heappush(heap, (-found[0], counter, child, child_idx, found[1], found[2]))

    return builder.build()


def _sse_threshold(x, y, min_leaf):
    order = np.argsort(x, kind='mergesort')
    xs, ys = x[order], y[order]
    n = xs.size
    positions = np.arange(min_leaf - 1, n - min_leaf)
    if positions.size == 0:
        return None
    positions = positions[xs[positions + 1] > xs[positions]]
    if positions.size == 0:
        return None

    csum = np.cumsum(ys)
    csq = np.cumsum(ys ** 2)
    n_left = positions + 1.0
    n_right = n - n_left
    s_left, q_left = csum[positions], csq[positions]
    s_right, q_right = csum[-1] - s_left, csq[-1] - q_left
    sse = (q_left - s_left ** 2 / n_left) + (q_right - s_right ** 2 / n_right)
    pick = int(np.argmin(sse))
    cut = positions[pick]
    parent = csq[-1] - csum[-1] ** 2 / n
    return parent - sse[pick], 0.5 * (xs[cut] + xs[cut + 1])


def fit_regression_tree(X, y, rng, min_leaf=10, n_candidates=None):
    """
    Regression tree grown depth-first; every leaf keeps at least ``min_leaf`` rows.

    At each node ``n_candidates`` predictors are sampled and the chi-square test
    against the quartile-binned response picks the split predictor among them.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    d = X.shape[1]
    n_candidates = d if n_candidates is None else max(1, min(d, n_candidates))
    builder = _Builder()
    root = builder.add_leaf([y.mean()])
    stack = [(root, np.arange(y.size))]

    while stack:
        node, idx = stack.pop()
        if idx.size < 2 * min_leaf or np.ptp(y[idx]) == 0:
            continue
        candidates = np.sort(rng.choice(d, size=n_candidates, replace=False))
        y_codes = quartile_codes(y[idx, None])[:, 0]
        chosen = None
        for feature in rank_predictors(X[idx][:, candidates], y_codes, N_BINS):
            found = _sse_threshold(X[idx, candidates[feature]], y[idx], min_leaf)
            if found is not None:
                chosen = (int(candidates[feature]), found[1])
                break
        if chosen is None:
            continue
        feature, threshold = chosen
        go_left = X[idx, feature] <= threshold
        left_idx, right_idx = idx[go_left], idx[~go_left]
        left, right = builder.split(node, feature, threshold, [y[left_idx].mean()], [y[right_idx].mean()])
        stack.append((right, right_idx))
        stack.append((left, left_idx))

    return builder.build()
