"""
Shared pieces of the regression families: z-scoring and the predict contract.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..exceptions import DegenerateData, DimensionMismatch, TooFewSamples, UnsupportedFamily

logger = logging.getLogger(__name__)

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class Standardizer:
    """Per-feature mean and standard deviation, applied at fit and predict."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X):
        X = np.asarray(X, dtype=float)
        return cls(mean=X.mean(axis=0), std=np.maximum(X.std(axis=0), STD_FLOOR))

    @property
    def n_features(self):
        return self.mean.size

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def to_dict(self):
        return {'mean': self.mean.tolist(), 'std': self.std.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(mean=np.asarray(data['mean'], dtype=float), std=np.asarray(data['std'], dtype=float))


def check_training_data(X, y, min_samples, family):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DimensionMismatch(f"{family}: {X.shape[0] if X.ndim else 0} rows against {y.size} responses")
    if y.size < min_samples:
        raise TooFewSamples(f"{family} needs at least {min_samples} samples, got {y.size}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DegenerateData(f"{family}: training data holds non-finite values")
    return X, y


class Regressor:
    """
    Base class of the five families.

    Subclasses set ``kind`` and implement ``_predict`` on standardized rows,
    ``_params``/``_from_params`` for serialization and, where defined,
    ``raw_feature_weights``.
    """

    kind = None

    def __init__(self, standardizer):
        self.standardizer = standardizer

    @property
    def n_features(self):
        return self.standardizer.n_features

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"{self.kind} model expects {self.n_features} features, got {X.shape[1]}"
            )
        y = self._predict(self.standardizer.transform(X))
        return float(y[0]) if single else y

    def raw_feature_weights(self):
        raise UnsupportedFamily(f"The {self.kind} family does not expose feature weights")

    def to_dict(self):
        return {'kind': self.kind, 'standardizer': self.standardizer.to_dict(), 'params': self._params()}

    @classmethod
    def from_dict(cls, data):
        return cls._from_params(Standardizer.from_dict(data['standardizer']), data['params'])

    def _predict(self, Z):
        raise NotImplementedError

    def _params(self):
        raise NotImplementedError

    @classmethod
    def _from_params(cls, standardizer, params):
        raise NotImplementedError
