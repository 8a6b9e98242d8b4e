"""
Exact Gaussian process regression with an ARD Matern-3/2 kernel and a linear basis.

Hyperparameters live in log space: theta = (log signal variance, log squared
length scale per feature, log noise variance). Basis coefficients are profiled out
by generalized least squares, so the log marginal likelihood and its gradient are
functions of theta alone.
"""

import logging

import numpy as np
from scipy import linalg
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from ..exceptions import DegenerateResponse, IllConditionedKernel
from .base import Regressor, Standardizer, check_training_data

logger = logging.getLogger(__name__)

SQRT3 = np.sqrt(3.0)
JITTER_STEPS = (0.0, 1e-12, 1e-10, 1e-8, 1e-6)
LOG_SCALE_BOUNDS = (np.log(1e-4), np.log(1e6))
RESTART_SPREAD = 1.0


def basis(Z):
    return np.hstack([np.ones((Z.shape[0], 1)), Z])


def scaled_distance(Za, Zb, log_scales):
    """sqrt(3 m) with m = sum_r diff_r^2 / sigma_r^2."""
    scale = np.exp(-0.5 * np.asarray(log_scales, dtype=float))
    return SQRT3 * cdist(Za * scale, Zb * scale, metric='euclidean')


def matern32(Za, Zb, log_signal, log_scales):
    """sigma_s^2 (1 + sqrt(3 m)) exp(-sqrt(3 m)), m = sum_r diff_r^2 / sigma_r^2."""
    s = scaled_distance(Za, Zb, log_scales)
    return np.exp(log_signal) * (1.0 + s) * np.exp(-s)


def unpack(theta):
    theta = np.asarray(theta, dtype=float)
    return theta[0], theta[1:-1], theta[-1]


def factorize(A, signal_var):
    """Cholesky factor of ``A`` with escalating jitter; returns (factor, jitter)."""
    for step in JITTER_STEPS:
        jitter = step * signal_var
        try:
            return linalg.cholesky(A + jitter * np.eye(A.shape[0]), lower=True), jitter
        except linalg.LinAlgError:
            continue
    raise IllConditionedKernel(f"Kernel matrix is not positive definite even with jitter {JITTER_STEPS[-1]:g} x signal variance")


def _profile(L, H, y):
    """GLS basis coefficients and alpha = A^-1 (y - H beta)."""
    whitened_H = linalg.solve_triangular(L, H, lower=True)
    whitened_y = linalg.solve_triangular(L, y, lower=True)
    beta = np.linalg.lstsq(whitened_H, whitened_y, rcond=None)[0]
    residual = y - H @ beta
    alpha = linalg.cho_solve((L, True), residual)
    return beta, residual, alpha


def log_marginal_likelihood(theta, Z, y, gradient=True):
    """
    Profile log marginal likelihood and, when asked, its gradient in theta.

    dL/dtheta_k = 0.5 tr((alpha alpha' - A^-1) dA/dtheta_k).
    """
    log_signal, log_scales, log_noise = unpack(theta)
    n = y.size
    H = basis(Z)
    K = matern32(Z, Z, log_signal, log_scales)
    A = K + np.exp(log_noise) * np.eye(n)
    L, _ = factorize(A, np.exp(log_signal))
    beta, residual, alpha = _profile(L, H, y)

    value = -0.5 * residual @ alpha - np.log(np.diag(L)).sum() - 0.5 * n * np.log(2.0 * np.pi)
    if not gradient:
        return value

    W = np.outer(alpha, alpha) - linalg.cho_solve((L, True), np.eye(n))
    grad = np.empty(len(theta))
    grad[0] = 0.5 * np.sum(W * K)
    WB = W * 1.5 * np.exp(log_signal) * np.exp(-scaled_distance(Z, Z, log_scales))
    for r, log_scale in enumerate(log_scales):
        column = Z[:, r:r + 1]
        grad[1 + r] = 0.5 * np.sum(WB * cdist(column, column, metric='sqeuclidean')) / np.exp(log_scale)
    grad[-1] = 0.5 * np.exp(log_noise) * np.trace(W)
    return value, grad


def initial_theta(Z, y):
    """Signal and noise variance from the response variance, squared length scales from input variances."""
    y_var = float(np.var(y))
    x_var = np.maximum(Z.var(axis=0), np.exp(LOG_SCALE_BOUNDS[0]))
    return np.concatenate([[np.log(y_var)], np.log(x_var), [np.log(y_var)]])


def theta_bounds(Z, y):
    log_y_var = np.log(float(np.var(y)))
    return (
        [(log_y_var - np.log(1e6), log_y_var + np.log(1e6))]
        + [LOG_SCALE_BOUNDS] * Z.shape[1]
        + [(log_y_var - np.log(1e8), log_y_var + np.log(1e2))]
    )


def optimize_hyperparameters(Z, y, theta0, bounds, max_iter=200, trace=None):
    """
    L-BFGS-B ascent on the log marginal likelihood from ``theta0``.

    When ``trace`` is a list, the likelihood at every accepted iterate is appended to it.
    """
    def negative(theta):
        try:
            value, grad = log_marginal_likelihood(theta, Z, y)
        except IllConditionedKernel:
            return 1e25, np.zeros_like(theta)
        return -value, -grad

    def record(theta):
        if trace is not None:
            trace.append(log_marginal_likelihood(theta, Z, y, gradient=False))

    if trace is not None:
        record(theta0)
    result = minimize(
        negative, theta0, jac=True, method='L-BFGS-B', bounds=bounds,
        callback=record, options={'maxiter': max_iter},
    )
    return result.x, -result.fun


class GprModel(Regressor):
    kind = 'gpr'

    def __init__(self, standardizer, Z_train, theta, beta, alpha, jitter=0.0, log_likelihood=None):
        super().__init__(standardizer)
        self.Z_train = np.asarray(Z_train, dtype=float)
        self.theta = np.asarray(theta, dtype=float)
        self.beta = np.asarray(beta, dtype=float)
        self.alpha = np.asarray(alpha, dtype=float)
        self.jitter = float(jitter)
        self.log_likelihood = log_likelihood
        self._factor = None

    @property
    def signal_variance(self):
        return float(np.exp(self.theta[0]))

    @property
    def squared_length_scales(self):
        return np.exp(self.theta[1:-1])

    @property
    def noise_variance(self):
        return float(np.exp(self.theta[-1]))

    def _cross(self, Z):
        log_signal, log_scales, _ = unpack(self.theta)
        return matern32(Z, self.Z_train, log_signal, log_scales)

    def _predict(self, Z):
        return basis(Z) @ self.beta + self._cross(Z) @ self.alpha

    def predict_std(self, X):
        """Latent posterior standard deviation (basis coefficients held at their estimate)."""
        Z = self.standardizer.transform(np.atleast_2d(X))
        if self._factor is None:
            log_signal, log_scales, log_noise = unpack(self.theta)
            A = matern32(self.Z_train, self.Z_train, log_signal, log_scales)
            A += (np.exp(log_noise) + self.jitter) * np.eye(A.shape[0])
            self._factor = linalg.cholesky(A, lower=True)
        v = linalg.solve_triangular(self._factor, self._cross(Z).T, lower=True)
        return np.sqrt(np.maximum(self.signal_variance - (v ** 2).sum(axis=0), 0.0))

    def raw_feature_weights(self):
        return ard_relevance(self.theta[1:-1])

    def _params(self):
        return {
            'Z_train': self.Z_train.tolist(),
            'theta': self.theta.tolist(),
            'beta': self.beta.tolist(),
            'alpha': self.alpha.tolist(),
            'jitter': self.jitter,
            'log_likelihood': self.log_likelihood,
        }

    @classmethod
    def _from_params(cls, standardizer, params):
        return cls(
            standardizer, params['Z_train'], params['theta'], params['beta'], params['alpha'],
            params.get('jitter', 0.0), params.get('log_likelihood'),
        )


def ard_relevance(log_scales):
    """exp(-(log sigma_r^2 - min log sigma^2)): 1 for the shortest length scale."""
    log_scales = np.asarray(log_scales, dtype=float)
    return np.exp(-(log_scales - log_scales.min()))


def condition_gpr(standardizer, Z, y, theta, log_likelihood=None):
    """GprModel for fixed hyperparameters ``theta``."""
    log_signal, log_scales, log_noise = unpack(theta)
    A = matern32(Z, Z, log_signal, log_scales) + np.exp(log_noise) * np.eye(y.size)
    L, jitter = factorize(A, np.exp(log_signal))
    beta, _, alpha = _profile(L, basis(Z), y)
    return GprModel(standardizer, Z, theta, beta, alpha, jitter, log_likelihood)


def fit_gpr(X, y, rng, restarts=5, max_iter=200, theta=None, min_samples=5):
    """
    Maximize the log marginal likelihood over ``restarts`` starting points.

    The first start is the variance-based initialization; the rest perturb it in
    log space with ``rng``. Passing ``theta`` skips optimization.
    """
    X, y = check_training_data(X, y, min_samples, 'gpr')
    if np.var(y) == 0:
        raise DegenerateResponse("GPR needs a response with non-zero variance")
    standardizer = Standardizer.fit(X)
    Z = standardizer.transform(X)
    if theta is not None:
        return condition_gpr(standardizer, Z, y, theta)

    theta0 = initial_theta(Z, y)
    bounds = theta_bounds(Z, y)
    lower, upper = np.array(bounds).T
    best_theta, best_value = None, -np.inf
    for attempt in range(max(1, restarts)):
        start = theta0 if attempt == 0 else np.clip(theta0 + rng.normal(0.0, RESTART_SPREAD, theta0.size), lower, upper)
        candidate, value = optimize_hyperparameters(Z, y, start, bounds, max_iter=max_iter)
        if np.isfinite(value) and value > best_value:
            best_theta, best_value = candidate, value
    if best_theta is None:
        raise IllConditionedKernel("No restart reached a positive definite kernel")

    logger.debug(f"GPR log marginal likelihood {best_value:.4f} after {restarts} starts")
    return condition_gpr(standardizer, Z, y, best_theta, float(best_value))
