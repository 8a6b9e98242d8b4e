"""
Elastic-net linear model (identity link, Gaussian deviance) fit by coordinate descent.
"""

import logging

import numpy as np

from .base import Regressor, Standardizer, check_training_data

logger = logging.getLogger(__name__)

TOLERANCE = 1e-8
MAX_SWEEPS = 100_000


def soft_threshold(value, threshold):
    return np.sign(value) * max(abs(value) - threshold, 0.0)


def objective(Z, y, intercept, beta, lam, alpha):
    """(1/n) RSS + lam (1 - alpha) / 2 ||beta||^2 + lam alpha ||beta||_1 in standardized space."""
    residual = y - intercept - Z @ beta
    return (
        residual @ residual / y.size
        + 0.5 * lam * (1.0 - alpha) * beta @ beta
        + lam * alpha * np.abs(beta).sum()
    )


def coordinate_descent(Z, y, lam, alpha, tol=TOLERANCE, max_sweeps=MAX_SWEEPS, record=False):
    """
    Minimize the elastic-net objective over ``beta`` with an unpenalized intercept.

    Columns of ``Z`` have zero mean, so the intercept is the response mean.
    Returns (intercept, beta, objective per sweep when ``record`` is set).
    """
    n, d = Z.shape
    intercept = float(y.mean())
    beta = np.zeros(d)
    residual = y - intercept
    col_sq = (Z ** 2).sum(axis=0) / n
    trace = [objective(Z, y, intercept, beta, lam, alpha)] if record else []

    for sweep in range(max_sweeps):
        largest = 0.0
        for j in range(d):
            old = beta[j]
            rho = Z[:, j] @ residual / n + col_sq[j] * old
            denom = 2.0 * col_sq[j] + lam * (1.0 - alpha)
            new = soft_threshold(2.0 * rho, lam * alpha) / denom if denom > 0 else 0.0
            if new != old:
                residual -= Z[:, j] * (new - old)
                beta[j] = new
                largest = max(largest, abs(new - old))
        if record:
            trace.append(objective(Z, y, intercept, beta, lam, alpha))
        if largest < tol:
            break
    else:
        logger.warning(f"Coordinate descent hit the {max_sweeps}-sweep cap")
    return intercept, beta, trace


class GlmModel(Regressor):
    kind = 'glm'

    def __init__(self, standardizer, intercept, beta, lam, alpha):
        super().__init__(standardizer)
        self.intercept = float(intercept)
        self.beta = np.asarray(beta, dtype=float)
        self.lam = float(lam)
        self.alpha = float(alpha)

    def _predict(self, Z):
        return self.intercept + Z @ self.beta

    def raw_coefficients(self):
        """Slopes in the units of the raw inputs."""
        return self.beta / self.standardizer.std

    def raw_feature_weights(self):
        return np.abs(self.beta)

    def objective(self, X, y):
        Z = self.standardizer.transform(X)
        return objective(Z, np.asarray(y, dtype=float), self.intercept, self.beta, self.lam, self.alpha)

    def _params(self):
        return {'intercept': self.intercept, 'beta': self.beta.tolist(), 'lambda': self.lam, 'alpha': self.alpha}

    @classmethod
    def _from_params(cls, standardizer, params):
        return cls(standardizer, params['intercept'], params['beta'], params['lambda'], params['alpha'])


def fit_glm(X, y, alpha=0.5, lam=None, min_samples=2):
    """Elastic-net fit; ``lam`` defaults to 1/sqrt(n)."""
    X, y = check_training_data(X, y, min_samples, 'glm')
    lam = 1.0 / np.sqrt(y.size) if lam is None else float(lam)
    standardizer = Standardizer.fit(X)
    intercept, beta, _ = coordinate_descent(standardizer.transform(X), y, lam, alpha)
    return GlmModel(standardizer, intercept, beta, lam, alpha)
