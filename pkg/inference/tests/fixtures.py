"""
Shared builders for inference tests.
"""

import numpy as np

from inference.conf import PipelineConfig
from sensing.features import WindowedInstance

CONTEXTS = ('rest', 'walk', 'run', 'bike', 'wave')


def fast_config(**overrides):
    """Small forests and short optimizer runs."""
    options = dict(
        rf_trees=10,
        gpr_restarts=1,
        gpr_max_iter=30,
        boost_max_iter=20,
        min_samples={'glm': 2, 'rf': 20, 'svm': 2, 'gpr': 5, 'nca': 5},
    )
    options.update(overrides)
    return PipelineConfig(**options).validate()


def make_instances(n_per_context=40, seed=0, contexts=CONTEXTS, noise=0.05, subject_id='S01'):
    """
    Instances whose IMU features separate the contexts and whose responses depend
    linearly on a different ECG feature in each context.
    """
    rng = np.random.default_rng(seed)
    instances = []
    t = 7500
    for m, context in enumerate(contexts):
        imu = rng.normal(0.0, 1.0, (n_per_context, 90))
        imu[:, m] += 8.0
        ecg = rng.normal(0.0, 1.0, (n_per_context, 20))
        br = 10.0 + 4.0 * m + 2.0 * ecg[:, 2 * m] + noise * rng.normal(size=n_per_context)
        ve = 8.0 + 10.0 * m + 3.0 * ecg[:, 2 * m + 1] + noise * rng.normal(size=n_per_context)
        for k in range(n_per_context):
            instances.append(WindowedInstance(
                t_center_ms=t,
                imu=imu[k],
                ecg=ecg[k],
                context=context,
                br_bpm=float(br[k]),
                ve_lpm=float(ve[k]),
                subject_id=subject_id,
            ))
            t += 3000
    return instances


def xor_points(n=32, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (n, 2))
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
    return X, y


def blobs(n_per_class=30, n_classes=2, d=4, spread=0.3, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(3.0 * c, spread, (n_per_class, d)) for c in range(n_classes)])
    y = np.repeat([f'c{c}' for c in range(n_classes)], n_per_class)
    return X, y


def trained_bundle(kinds=('glm',), targets=('br', 've'), n_per_context=20):
    """Bundle with a classifier and one group per (target, kind) on ``make_instances`` data."""
    from inference.bundle import ModelBundle
    from inference.pipeline import train_classifier, train_pipeline

    instances = make_instances(n_per_context=n_per_context)
    config = fast_config()
    groups = {
        (target, kind): train_pipeline(instances, kind, target, config)
        for target in targets for kind in kinds
    }
    return ModelBundle(
        classifier=train_classifier(instances, config),
        groups=groups,
        config_hash=config.config_hash(),
        layout={'imu_width': 90, 'ecg_width': 20},
    ), instances
