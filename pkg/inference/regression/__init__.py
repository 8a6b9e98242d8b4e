"""
The five regression families behind one fit / predict / serialize contract.
"""

from sensing.exceptions import BadConfig
from sensing.seeding import substream

from ..exceptions import BundleFormatError
from .base import Regressor, Standardizer
from .glm import GlmModel, fit_glm
from .gpr import GprModel, fit_gpr
from .nca import NcaModel, fit_nca
from .rf import RfModel, fit_rf
from .svr import SvrModel, fit_svr

FAMILIES = {
    'glm': GlmModel,
    'rf': RfModel,
    'svm': SvrModel,
    'gpr': GprModel,
    'nca': NcaModel,
}


def fit_model(kind, X, y, config, stream=()):
    """
    Fit one model of ``kind`` with the hyperparameters in ``config``.

    ``stream`` names the random substream (for example the context), so each bank
    draws its own numbers.
    """
    min_samples = config.min_samples.get(kind, 2)
    if kind == 'glm':
        return fit_glm(X, y, alpha=config.glm_alpha, lam=config.glm_lambda, min_samples=min_samples)
    if kind == 'rf':
        return fit_rf(
            X, y,
            rng=substream(config.seed, 'rf', *stream),
            oob_rng=substream(config.seed, 'rf-oob', *stream),
            n_trees=config.rf_trees,
            min_leaf=config.rf_min_leaf,
            min_samples=min_samples,
        )
    if kind == 'svm':
        return fit_svr(X, y, min_samples=min_samples)
    if kind == 'gpr':
        return fit_gpr(
            X, y,
            rng=substream(config.seed, 'gpr', *stream),
            restarts=config.gpr_restarts,
            max_iter=config.gpr_max_iter,
            min_samples=min_samples,
        )
    if kind == 'nca':
        return fit_nca(X, y, lam=config.nca_lambda, hard=config.nca_hard, min_samples=min_samples)
    raise BadConfig(f"Unknown model kind '{kind}'")


def model_from_dict(data):
    try:
        family = FAMILIES[data['kind']]
    except KeyError as e:
        raise BundleFormatError(f"Unknown or missing model kind: {e}")
    return family.from_dict(data)


__all__ = [
    'FAMILIES', 'Regressor', 'Standardizer', 'fit_model', 'model_from_dict',
    'GlmModel', 'RfModel', 'SvrModel', 'GprModel', 'NcaModel',
    'fit_glm', 'fit_rf', 'fit_svr', 'fit_gpr', 'fit_nca',
]
