"""
Immutable pipeline configuration built from ``settings.CARDIORESP``.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, Optional, Tuple

from django.conf import settings

from sensing.exceptions import BadConfig
from sensing.imu_features import RAW_FEATURE_NAMES

MODEL_KINDS = ('glm', 'rf', 'svm', 'gpr', 'nca')
TARGETS = ('br', 've')
SWEEP_RATIOS = (0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2)

DEFAULT_CLUSTERS = {
    'Rh': ('r_mag', 'r_prom', 'r_power'),
    'Rw': ('r_width_ms', 'qs_dist_ms'),
    'Th': ('t_mag', 't_power'),
    'Tw': ('t_width_ms', 'st_dist_ms'),
    'RR': ('bpm',),
}

DEFAULT_MIN_SAMPLES = {'glm': 2, 'rf': 20, 'svm': 2, 'gpr': 5, 'nca': 5}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    win_s: float = 15.0
    step_s: float = 3.0
    contexts: Tuple[str, ...] = ('rest', 'walk', 'run', 'bike', 'wave')
    tau: float = 0.8
    train_ratio: float = 0.8
    sweep_ratios: Tuple[float, ...] = SWEEP_RATIOS
    split_mode: str = 'instance'
    ecg_band: Tuple[float, float] = (5.0, 25.0)
    ecg_median_k: int = 3
    imu_band: Tuple[float, float] = (0.01, 20.0)
    imu_median_k: int = 5
    imu_keep_entropy: bool = False
    glm_alpha: float = 0.5
    glm_lambda: Optional[float] = None
    rf_trees: int = 200
    rf_min_leaf: int = 10
    gpr_restarts: int = 5
    gpr_max_iter: int = 200
    nca_lambda: Optional[float] = None
    nca_hard: bool = False
    boost_max_iter: int = 200
    boost_nu: float = 0.01
    min_samples: Dict[str, int] = field(default_factory=lambda: dict(DEFAULT_MIN_SAMPLES))
    clusters: Dict[str, Tuple[str, ...]] = field(default_factory=lambda: dict(DEFAULT_CLUSTERS))

    def validate(self):
        if not (self.win_s > self.step_s > 0):
            raise BadConfig(f"Need win_s > step_s > 0, got {self.win_s}, {self.step_s}")
        if len(self.contexts) < 2 or len(set(self.contexts)) != len(self.contexts):
            raise BadConfig("At least two distinct contexts are required")
        if not (1.0 / len(self.contexts) < self.tau <= 1.0):
            raise BadConfig(f"Selection threshold {self.tau} must lie in (1/M, 1]")
        for ratio in (self.train_ratio, *self.sweep_ratios):
            if not (0.2 - 1e-9 <= ratio <= 0.8 + 1e-9):
                raise BadConfig(f"Train ratio {ratio} is outside [0.2, 0.8]")
        if self.split_mode not in ('instance', 'block'):
            raise BadConfig(f"Unknown split mode '{self.split_mode}'")
        if not (0.0 <= self.glm_alpha <= 1.0):
            raise BadConfig(f"GLM alpha {self.glm_alpha} is outside [0, 1]")
        if self.rf_trees < 1 or self.rf_min_leaf < 1 or self.boost_max_iter < 1:
            raise BadConfig("Tree counts, leaf sizes and boosting iterations must be positive")
        return self

    def ecg_options(self):
        return {'median_k': self.ecg_median_k, 'band': tuple(self.ecg_band)}

    def imu_options(self):
        mask = [True] * len(RAW_FEATURE_NAMES) if self.imu_keep_entropy else None
        return {'median_k': self.imu_median_k, 'band': tuple(self.imu_band), 'mask': mask}

    def to_dict(self):
        data = asdict(self)
        data['contexts'] = list(self.contexts)
        data['sweep_ratios'] = list(self.sweep_ratios)
        data['clusters'] = {k: list(v) for k, v in self.clusters.items()}
        return data

    def config_hash(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def override(self, **options):
        """Copy with the non-None options applied."""
        known = {f.name for f in fields(self)}
        changes = {k: v for k, v in options.items() if v is not None and k in known}
        return replace(self, **changes).validate() if changes else self


def get_config():
    """PipelineConfig from ``settings.CARDIORESP``; missing keys keep their defaults."""
    raw = getattr(settings, 'CARDIORESP', {})
    options = {}
    for f in fields(PipelineConfig):
        key = f.name.upper()
        if key in raw:
            value = raw[key]
            if f.name in ('contexts', 'sweep_ratios', 'ecg_band', 'imu_band'):
                value = tuple(value)
            elif f.name == 'clusters':
                value = {k: tuple(v) for k, v in value.items()}
            options[f.name] = value
    return PipelineConfig(**options).validate()
