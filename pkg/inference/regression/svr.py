"""
Epsilon-insensitive support vector regression solved by SMO.

The dual is handled in the stacked 2n-variable form (alpha then alpha*) with
label signs z = (+1, ..., -1, ...); the working pair is the maximal KKT violating
pair and the solver stops once the violation gap falls to the tolerance.
"""

import logging

import numpy as np
from scipy import stats
from sklearn.metrics.pairwise import rbf_kernel

from .base import Regressor, Standardizer, check_training_data

logger = logging.getLogger(__name__)

GAP_TOLERANCE = 1e-6
TAU = 1e-12


def kernel(A, B):
    """exp(-||a - b||^2) on standardized rows."""
    return rbf_kernel(A, B, gamma=1.0)


def default_epsilon(y):
    """Tube half-width from the response spread: iqr / 13.49, floored for flat responses."""
    floor = 1e-3 * float(np.std(y)) + 1e-12
    eps = float(stats.iqr(y)) / 13.49
    if eps < floor:
        logger.warning(f"Response IQR is {eps * 13.49:.3g}; using tube half-width floor {floor:.3g}")
    return max(eps, floor)


def dual_objective(K, y, coef, abs_sum, eps):
    """0.5 c'Kc + eps * sum(alpha + alpha*) - y'c with c = alpha - alpha*."""
    return 0.5 * coef @ K @ coef + eps * abs_sum - y @ coef


def smo(K, y, eps, C, tol=GAP_TOLERANCE, max_iter=None):
    """
    Solve the SVR dual. Returns (alpha, alpha_star, b, gap, iterations).
    """
    n = y.size
    z = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([eps - y, eps + y])
    a = np.zeros(2 * n)
    G = p.copy()
    diag = np.concatenate([np.diag(K), np.diag(K)])
    index = np.concatenate([np.arange(n), np.arange(n)])
    max_iter = max_iter or max(100_000, 100 * n)

    def q_row(t):
        return z[t] * z * K[index[t], index]

    gap = np.inf
    iteration = 0
    for iteration in range(max_iter):
        score = -z * G
        up = ((z > 0) & (a < C)) | ((z < 0) & (a > 0))
        low = ((z > 0) & (a > 0)) | ((z < 0) & (a < C))
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        gap = score[i] - score[j]
        if gap <= tol:
            break

        Qi, Qj = q_row(i), q_row(j)
        old_i, old_j = a[i], a[j]
        if z[i] != z[j]:
            quad = max(diag[i] + diag[j] + 2.0 * Qi[j], TAU)
            delta = (-G[i] - G[j]) / quad
            diff = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if diff > 0:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = diff
            elif a[i] < 0:
                a[i] = 0.0
                a[j] = -diff
            if diff > 0:
                if a[i] > C:
                    a[i] = C
                    a[j] = C - diff
            elif a[j] > C:
                a[j] = C
                a[i] = C + diff
        else:
            quad = max(diag[i] + diag[j] - 2.0 * Qi[j], TAU)
            delta = (G[i] - G[j]) / quad
            total = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if total > C:
                if a[i] > C:
                    a[i] = C
                    a[j] = total - C
            elif a[j] < 0:
                a[j] = 0.0
                a[i] = total
            if total > C:
                if a[j] > C:
                    a[j] = C
                    a[i] = total - C
            elif a[i] < 0:
                a[i] = 0.0
                a[j] = total
        G += Qi * (a[i] - old_i) + Qj * (a[j] - old_j)
    else:
        logger.warning(f"SMO stopped at the {max_iter}-iteration cap with gap {gap:.3g}")

    b = -_rho(a, z, G, C)
    return a[:n].copy(), a[n:].copy(), b, float(gap), iteration


def _rho(a, z, G, C):
    zG = z * G
    at_upper = a >= C
    at_lower = a <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(zG[free].mean())
    upper_bound = np.concatenate([zG[at_upper & (z < 0)], zG[at_lower & (z > 0)]])
    lower_bound = np.concatenate([zG[at_upper & (z > 0)], zG[at_lower & (z < 0)]])
    ub = upper_bound.min() if upper_bound.size else np.inf
    lb = lower_bound.max() if lower_bound.size else -np.inf
    return float((ub + lb) / 2.0)


class SvrModel(Regressor):
    kind = 'svm'

    def __init__(self, standardizer, support_vectors, dual_coef, b, epsilon, C, gap=0.0):
        super().__init__(standardizer)
        self.support_vectors = np.asarray(support_vectors, dtype=float).reshape(-1, standardizer.n_features)
        self.dual_coef = np.asarray(dual_coef, dtype=float)
        self.b = float(b)
        self.epsilon = float(epsilon)
        self.C = float(C)
        self.gap = float(gap)

    def _predict(self, Z):
        if self.dual_coef.size == 0:
            return np.full(Z.shape[0], self.b)
        return kernel(Z, self.support_vectors) @ self.dual_coef + self.b

    def _params(self):
        return {
            'support_vectors': self.support_vectors.tolist(),
            'dual_coef': self.dual_coef.tolist(),
            'b': self.b,
            'epsilon': self.epsilon,
            'C': self.C,
            'gap': self.gap,
        }

    @classmethod
    def _from_params(cls, standardizer, params):
        return cls(
            standardizer, params['support_vectors'], params['dual_coef'],
            params['b'], params['epsilon'], params['C'], params.get('gap', 0.0),
        )


def fit_svr(X, y, epsilon=None, C=None, min_samples=2):
    """SVR with the fixed unit-scale Gaussian kernel; ``C`` defaults to ten times the tube half-width."""
    X, y = check_training_data(X, y, min_samples, 'svm')
    eps = default_epsilon(y) if epsilon is None else float(epsilon)
    C = 10.0 * eps if C is None else float(C)
    standardizer = Standardizer.fit(X)
    Z = standardizer.transform(X)

    alpha, alpha_star, b, gap, iterations = smo(kernel(Z, Z), y, eps, C)
    coef = alpha - alpha_star
    support = np.flatnonzero(coef != 0)
    logger.debug(f"SMO converged in {iterations} iterations: {support.size} support vectors, gap {gap:.2g}")
    return SvrModel(standardizer, Z[support], coef[support], b, eps, C, gap)
