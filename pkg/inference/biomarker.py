"""
Biomarker relevance from trained regression banks.

A model's feature weights are normalized, the mean/std branch of each morphology
parameter is merged, and parameters are clustered into the five biomarkers. The
relevance of a context bank is the average over its ranking-capable models.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import pandas as pd

from sensing.ecg_features import ECG_FEATURE_NAMES, MORPHOLOGY_FIELDS

from .conf import DEFAULT_CLUSTERS
from .exceptions import LayoutMismatch, NoRankableModels, UnsupportedFamily

logger = logging.getLogger(__name__)

BIOMARKERS = tuple(DEFAULT_CLUSTERS)


@dataclass(frozen=True)
class FeatureWeights:
    w: np.ndarray
    source: str
    context: Optional[str] = None


@dataclass(frozen=True)
class BiomarkerRelevance:
    """Percent shares over the biomarkers, summing to 100."""

    rel: Dict[str, float]
    context: Optional[str] = None
    target: Optional[str] = None

    def as_row(self):
        return {'target': self.target, 'context': self.context, **self.rel}


def feature_weights(model, context=None):
    """Non-negative weights of a GLM, RF, GPR or NCA model, normalized to sum 1."""
    raw = np.abs(np.asarray(model.raw_feature_weights(), dtype=float))
    total = raw.sum()
    if total <= 0 or not np.isfinite(total):
        logger.warning(f"{model.kind} model has no usable feature weights; ranking it uniformly")
        raw = np.ones_like(raw)
        total = raw.sum()
    return FeatureWeights(w=raw / total, source=model.kind, context=context)


def merge_stats(weights):
    """Per-parameter weight: the mean-branch weight plus the std-branch weight."""
    w = weights.w if isinstance(weights, FeatureWeights) else np.asarray(weights, dtype=float)
    if w.size != len(ECG_FEATURE_NAMES):
        raise LayoutMismatch(f"Expected {len(ECG_FEATURE_NAMES)} ECG feature weights, got {w.size}")
    by_name = dict(zip(ECG_FEATURE_NAMES, w.tolist()))
    return {p: by_name[f'{p}_mean'] + by_name[f'{p}_std'] for p in MORPHOLOGY_FIELDS}


def check_clusters(clusters):
    members = [p for group in clusters.values() for p in group]
    if sorted(members) != sorted(MORPHOLOGY_FIELDS):
        raise LayoutMismatch("Biomarker clusters must cover every morphology parameter exactly once")
    return clusters


def _percent(values, keys):
    values = np.asarray(values, dtype=float)
    total = values.sum()
    if total <= 0:
        values = np.ones(len(keys))
        total = values.sum()
    return dict(zip(keys, (100.0 * values / total).tolist()))


def cluster_biomarkers(merged, clusters=None, context=None, target=None):
    clusters = check_clusters(clusters or DEFAULT_CLUSTERS)
    means = [np.mean([merged[p] for p in members]) for members in clusters.values()]
    return BiomarkerRelevance(rel=_percent(means, list(clusters)), context=context, target=target)


def model_relevance(model, clusters=None, context=None, target=None):
    return cluster_biomarkers(merge_stats(feature_weights(model, context)), clusters, context, target)


def contextual_relevance(bank_models, context, target=None, clusters=None):
    """
    Average relevance over the ranking-capable models of one context bank.

    SVR models are skipped.
    """
    relevances = []
    for model in bank_models:
        try:
            relevances.append(model_relevance(model, clusters, context, target))
        except UnsupportedFamily:
            continue
    if not relevances:
        raise NoRankableModels(f"Bank '{context}' holds no GLM, RF, GPR or NCA model")
    keys = list(relevances[0].rel)
    mean = np.mean([[r.rel[k] for k in keys] for r in relevances], axis=0)
    return BiomarkerRelevance(rel=_percent(mean, keys), context=context, target=target)


def rank_groups(groups, clusters=None):
    """
    Relevance per (target, context) over every BankGroup given, pooling the models
    of all groups that share a target.
    """
    pooled = {}
    for group in groups:
        for context in group.contexts:
            pooled.setdefault((group.target, context), []).extend(group.banks[context])
    results = []
    for (target, context), models in pooled.items():
        results.append(contextual_relevance(models, context, target, clusters))
        logger.debug(f"Relevance {target}/{context}: {results[-1].rel}")
    return results


def relevance_frame(relevances, clusters=None):
    columns = ['target', 'context', *(clusters or BIOMARKERS)]
    return pd.DataFrame([r.as_row() for r in relevances], columns=columns)
