"""
Context-conditioned inference: per-context regression banks, the posterior-driven
aggregator, hold-out splits and evaluation.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from sklearn.metrics import accuracy_score, confusion_matrix, mean_absolute_error
from sklearn.model_selection import train_test_split

from sensing.exceptions import BadConfig
from sensing.seeding import child_seed

from .conf import MODEL_KINDS
from .context_classifier import totalboost_train
from .exceptions import BankUnderflow, EmptyTestSet
from .regression import fit_model, model_from_dict

logger = logging.getLogger(__name__)


def ratio_label(ratio):
    train = int(round(ratio * 100))
    return f"{train}/{100 - train}"


def aggregate(p, bank_preds, tau):
    """
    Select the most probable bank when its posterior reaches ``tau``, else average
    the bank predictions weighted by the posterior. Ties go to the lowest index.
    """
    p = np.asarray(p, dtype=float)
    bank_preds = np.asarray(bank_preds, dtype=float)
    best = int(np.argmax(p))
    if p[best] >= tau:
        return float(bank_preds[best])
    return float(p @ bank_preds)


def aggregate_rows(P, B, tau):
    """Row-wise ``aggregate`` over posteriors ``P`` and bank predictions ``B`` (rows x contexts)."""
    P = np.asarray(P, dtype=float)
    B = np.asarray(B, dtype=float)
    best = np.argmax(P, axis=1)
    rows = np.arange(P.shape[0])
    weighted = (P * B).sum(axis=1)
    return np.where(P[rows, best] >= tau, B[rows, best], weighted)


@dataclass
class BankGroup:
    """Regression banks for one target: context -> trained models of ``kinds``."""

    target: str
    kinds: Tuple[str, ...]
    contexts: Tuple[str, ...]
    banks: Dict[str, list]
    tau: float = 0.8

    def bank_predictions(self, ecg):
        """Rows x contexts; a bank's prediction is the mean over its models."""
        ecg = np.atleast_2d(np.asarray(ecg, dtype=float))
        return np.column_stack([
            np.mean([model.predict(ecg) for model in self.banks[context]], axis=0)
            for context in self.contexts
        ])

    def predict(self, posterior, ecg):
        return aggregate_rows(np.atleast_2d(posterior), self.bank_predictions(ecg), self.tau)

    def to_dict(self):
        return {
            'target': self.target,
            'kinds': list(self.kinds),
            'contexts': list(self.contexts),
            'tau': self.tau,
            'banks': {c: [m.to_dict() for m in self.banks[c]] for c in self.contexts},
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            target=data['target'],
            kinds=tuple(data['kinds']),
            contexts=tuple(data['contexts']),
            tau=float(data['tau']),
            banks={c: [model_from_dict(m) for m in models] for c, models in data['banks'].items()},
        )


@dataclass
class PredictionRecord:
    t_center_ms: int
    posterior: np.ndarray
    bank_predictions: np.ndarray
    prediction: float
    truth: Optional[float] = None
    context: Optional[str] = None
    predicted_context: Optional[str] = None
    subject_id: str = ''


def _kinds(model_kind):
    kinds = (model_kind,) if isinstance(model_kind, str) else tuple(model_kind)
    unknown = [k for k in kinds if k not in MODEL_KINDS]
    if not kinds or unknown:
        raise BadConfig(f"Unknown model kind(s): {', '.join(unknown) or '(none)'}")
    return kinds


def trainable(instances, target):
    """Labelled instances with a finite response for ``target``."""
    return [i for i in instances if i.labelled and np.isfinite(i.response(target))]


def train_classifier(instances, config):
    labelled = [i for i in instances if i.labelled]
    X = np.vstack([i.imu for i in labelled]) if labelled else np.empty((0, 0))
    y = [i.context for i in labelled]
    return totalboost_train(X, y, classes=config.contexts, max_iter=config.boost_max_iter, v=config.boost_nu)


def train_pipeline(instances, model_kind, target, config):
    """
    One bank per context, each trained only on that context's instances.

    ``model_kind`` is one family or a sequence of families sharing the banks.
    """
    kinds = _kinds(model_kind)
    usable = trainable(instances, target)
    banks = {}
    for context in config.contexts:
        rows = [i for i in usable if i.context == context]
        needed = max(config.min_samples.get(k, 2) for k in kinds)
        if len(rows) < needed:
            raise BankUnderflow(
                f"Context '{context}' has {len(rows)} {target} instances; {'/'.join(kinds)} needs {needed}",
                context=context,
            )
        X = np.vstack([i.ecg for i in rows])
        y = np.array([i.response(target) for i in rows])
        banks[context] = [fit_model(kind, X, y, config, stream=(target, context)) for kind in kinds]
        logger.debug(f"Bank {target}/{context}: {len(rows)} instances, kinds {', '.join(kinds)}")

    logger.info(f"Trained {len(banks)} {target} banks of {'/'.join(kinds)}")
    return BankGroup(target=target, kinds=kinds, contexts=tuple(config.contexts), banks=banks, tau=config.tau)


def train_agnostic(instances, model_kind, target, config):
    """Models of the same kinds trained on every labelled instance, context ignored."""
    kinds = _kinds(model_kind)
    rows = trainable(instances, target)
    X = np.vstack([i.ecg for i in rows]) if rows else np.empty((0, 0))
    y = np.array([i.response(target) for i in rows])
    return [fit_model(kind, X, y, config, stream=(target, 'agnostic')) for kind in kinds]


def stratified_split(instances, ratio, seed):
    """Train/test index lists stratified by context, drawn per instance."""
    labelled = [k for k, i in enumerate(instances) if i.labelled]
    contexts = [instances[k].context for k in labelled]
    train, test = train_test_split(
        labelled,
        train_size=ratio,
        stratify=contexts,
        random_state=child_seed(seed, 'split', ratio_label(ratio)),
    )
    return sorted(train), sorted(test)


def block_split(instances, ratio, win_s):
    """
    Temporal split: within each subject/context run, the earliest ``ratio`` share
    trains and the rest tests, minus test windows overlapping the last training window.
    """
    runs = {}
    for k, inst in enumerate(instances):
        if inst.labelled:
            runs.setdefault((inst.subject_id, inst.context), []).append(k)
    win_ms = win_s * 1000.0
    train, test = [], []
    for members in runs.values():
        members.sort(key=lambda k: instances[k].t_center_ms)
        cut = int(round(ratio * len(members)))
        head, tail = members[:cut], members[cut:]
        train.extend(head)
        if head:
            last = instances[head[-1]].t_center_ms
            tail = [k for k in tail if instances[k].t_center_ms - last >= win_ms]
        test.extend(tail)
    return sorted(train), sorted(test)


def split_instances(instances, ratio, config):
    if config.split_mode == 'block':
        train, test = block_split(instances, ratio, config.win_s)
    else:
        train, test = stratified_split(instances, ratio, config.seed)
    return [instances[k] for k in train], [instances[k] for k in test]


def classifier_metrics(contexts, truth, predicted):
    """Accuracy, confusion matrix (rows true, columns predicted) and per-class TPR/FNR/FPR."""
    matrix = confusion_matrix(truth, predicted, labels=list(contexts))
    total = matrix.sum()
    per_class = {}
    for m, context in enumerate(contexts):
        positives = matrix[m].sum()
        negatives = total - positives
        tp = matrix[m, m]
        fp = matrix[:, m].sum() - tp
        tpr = tp / positives if positives else None
        per_class[context] = {
            'support': int(positives),
            'tpr': None if tpr is None else float(tpr),
            'fnr': None if tpr is None else float(1.0 - tpr),
            'fpr': float(fp / negatives) if negatives else None,
        }
    return {
        'contexts': list(contexts),
        'accuracy': float(accuracy_score(truth, predicted)),
        'confusion': matrix.tolist(),
        'per_class': per_class,
    }


def predict_records(group, classifier, instances, posterior=None):
    if posterior is None:
        posterior = classifier.predict_posterior(np.vstack([i.imu for i in instances]))
    ecg = np.vstack([i.ecg for i in instances])
    banks = group.bank_predictions(ecg)
    predictions = aggregate_rows(posterior, banks, group.tau)
    classes = classifier.classes
    return [
        PredictionRecord(
            t_center_ms=inst.t_center_ms,
            posterior=posterior[k],
            bank_predictions=banks[k],
            prediction=float(predictions[k]),
            truth=inst.response(group.target),
            context=inst.context,
            predicted_context=classes[int(np.argmax(posterior[k]))],
            subject_id=inst.subject_id,
        )
        for k, inst in enumerate(instances)
    ]


def regression_metrics(records, contexts, agnostic_predictions=None):
    truth = np.array([r.truth for r in records])
    predicted = np.array([r.prediction for r in records])
    per_context = {}
    for context in contexts:
        mask = np.array([r.context == context for r in records])
        per_context[context] = float(mean_absolute_error(truth[mask], predicted[mask])) if mask.any() else None
    metrics = {
        'n_test': int(truth.size),
        'mae': float(mean_absolute_error(truth, predicted)),
        'mae_per_context': per_context,
    }
    if agnostic_predictions is not None:
        metrics['mae_agnostic'] = float(mean_absolute_error(truth, agnostic_predictions))
    return metrics


def evaluate(group, test_instances, classifier, agnostic=None, posterior=None):
    """
    Metrics and prediction records of ``group`` on labelled test instances with a
    finite response. ``agnostic`` models, when given, are scored on the same rows.
    """
    rows = trainable(test_instances, group.target)
    if not rows:
        raise EmptyTestSet(f"No labelled {group.target} test instances")
    if posterior is not None:
        keep = {id(i) for i in rows}
        posterior = np.asarray(posterior)[[id(i) in keep for i in test_instances]]
    records = predict_records(group, classifier, rows, posterior)

    agnostic_predictions = None
    if agnostic:
        ecg = np.vstack([i.ecg for i in rows])
        agnostic_predictions = np.mean([m.predict(ecg) for m in agnostic], axis=0)
    metrics = regression_metrics(records, group.contexts, agnostic_predictions)
    metrics.update(classifier_metrics(
        classifier.classes, [r.context for r in records], [r.predicted_context for r in records],
    ))
    return metrics, records


@dataclass
class HoldoutResult:
    ratio: float
    classifier: dict
    metrics: Dict[str, Dict[str, dict]] = field(default_factory=dict)
    records: Dict[Tuple[str, str], List[PredictionRecord]] = field(default_factory=dict)


def run_holdout(instances, model_kinds, targets, ratio, config, with_agnostic=True):
    """
    Split, train the classifier and one BankGroup per (target, kind), and evaluate.
    """
    train, test = split_instances(instances, ratio, config)
    test = [i for i in test if i.labelled]
    if not test:
        raise EmptyTestSet(f"Split {ratio_label(ratio)} left no labelled test instances")
    logger.info(f"Hold-out {ratio_label(ratio)}: {len(train)} train / {len(test)} test instances")

    classifier = train_classifier(train, config)
    posterior = classifier.predict_posterior(np.vstack([i.imu for i in test]))
    predicted = [classifier.classes[k] for k in np.argmax(posterior, axis=1)]
    result = HoldoutResult(
        ratio=ratio,
        classifier=classifier_metrics(classifier.classes, [i.context for i in test], predicted),
    )
    for target in targets:
        result.metrics[target] = {}
        for kind in model_kinds:
            group = train_pipeline(train, kind, target, config)
            agnostic = train_agnostic(train, kind, target, config) if with_agnostic else None
            metrics, records = evaluate(group, test, classifier, agnostic, posterior)
            result.metrics[target][kind] = metrics
            result.records[(target, kind)] = records
            logger.info(
                f"{ratio_label(ratio)} {target}/{kind}: MAE {metrics['mae']:.3f}"
                + (f" (agnostic {metrics['mae_agnostic']:.3f})" if 'mae_agnostic' in metrics else '')
            )
    return result


def run_sweep(instances, model_kinds, targets, config, ratios=None, with_agnostic=True):
    return [
        run_holdout(instances, model_kinds, targets, ratio, config, with_agnostic)
        for ratio in (ratios or config.sweep_ratios)
    ]
