"""
Assemble windowed instances from a loaded session and move them through CSV.
"""

import hashlib
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from . import dsp
from .data_io import synchronize, window_label, window_response
from .ecg_features import ECG_FEATURE_NAMES, window_ecg_features
from .exceptions import NoBeatsFound, SchemaMismatch
from .imu_features import IMU_FEATURE_NAMES, RAW_FEATURE_NAMES, extract_imu_features

logger = logging.getLogger(__name__)

META_COLUMNS = ('subject_id', 't_center_ms', 'context', 'br_bpm', 've_lpm')


@dataclass(frozen=True)
class WindowedInstance:
    """One window: IMU and ECG feature vectors, context label and averaged responses."""

    t_center_ms: int
    imu: np.ndarray
    ecg: np.ndarray
    context: Optional[str] = None
    br_bpm: float = math.nan
    ve_lpm: float = math.nan
    subject_id: str = ''

    def response(self, target):
        return self.br_bpm if target == 'br' else self.ve_lpm

    @property
    def labelled(self):
        return self.context is not None


def extract_session_instances(ecg, imu, resp, intervals, subject_id='', win_s=15.0, step_s=3.0,
                              ecg_options=None, imu_options=None):
    """
    Window a synchronized session and compute features for every window.

    Windows where ECG beat detection fails are dropped. Windows that straddle an
    activity boundary keep ``context=None``; windows without spirometer samples keep NaN
    responses.
    """
    ecg, imu = synchronize(ecg, imu)
    ecg_windows = dsp.sliding_windows(ecg, win_s, step_s)
    imu_windows = dsp.sliding_windows(imu, win_s, step_s)
    responses = window_response(resp, win_s, step_s, t0_ms=ecg.t0_ms, duration_s=ecg.duration_s)

    count = min(len(ecg_windows), len(imu_windows))
    win_ms = int(round(win_s * 1000.0))
    instances = []
    dropped = 0
    for k in range(count):
        ecg_win, imu_win = ecg_windows[k], imu_windows[k]
        try:
            ecg_vector = window_ecg_features(ecg_win, **(ecg_options or {}))
        except NoBeatsFound as e:
            dropped += 1
            logger.debug(f"Dropping window at {ecg_win.t_center_ms} ms: {e.message}")
            continue
        imu_vector = extract_imu_features(imu_win, **(imu_options or {}))
        br, ve = (responses[k].br_mean, responses[k].ve_mean) if k < len(responses) else (math.nan, math.nan)
        instances.append(WindowedInstance(
            t_center_ms=ecg_win.t_center_ms,
            imu=imu_vector,
            ecg=ecg_vector.values,
            context=window_label(intervals, ecg_win.t_start_ms, ecg_win.t_start_ms + win_ms),
            br_bpm=br,
            ve_lpm=ve,
            subject_id=subject_id,
        ))

    logger.info(
        f"Session {subject_id or '?'}: {len(instances)} instances from {count} windows "
        f"({dropped} dropped for missing beats)"
    )
    return instances


def imu_names_for(width):
    """Column names for an IMU vector of the exported (90) or raw (96) width."""
    if width == len(IMU_FEATURE_NAMES):
        return IMU_FEATURE_NAMES
    if width == len(RAW_FEATURE_NAMES):
        return RAW_FEATURE_NAMES
    raise SchemaMismatch(f"No IMU feature layout has {width} columns")


def instances_to_frame(instances):
    imu_names = imu_names_for(instances[0].imu.size) if instances else IMU_FEATURE_NAMES
    rows = []
    for inst in instances:
        row = {
            'subject_id': inst.subject_id,
            't_center_ms': inst.t_center_ms,
            'context': inst.context or '',
            'br_bpm': inst.br_bpm,
            've_lpm': inst.ve_lpm,
        }
        row.update(zip(ECG_FEATURE_NAMES, inst.ecg.tolist()))
        row.update(zip(imu_names, inst.imu.tolist()))
        rows.append(row)
    columns = list(META_COLUMNS) + list(ECG_FEATURE_NAMES) + list(imu_names)
    return pd.DataFrame(rows, columns=columns)


def frame_to_instances(frame):
    head = list(META_COLUMNS) + list(ECG_FEATURE_NAMES)
    imu_names = imu_names_for(len(frame.columns) - len(head))
    if list(frame.columns) != head + list(imu_names):
        raise SchemaMismatch("Instance table columns do not match the feature layout")
    ecg = frame.loc[:, list(ECG_FEATURE_NAMES)].to_numpy(dtype=float)
    imu = frame.loc[:, list(imu_names)].to_numpy(dtype=float)
    contexts = frame['context'].fillna('').astype(str).tolist()
    subjects = frame['subject_id'].fillna('').astype(str).tolist()
    return [
        WindowedInstance(
            t_center_ms=int(row.t_center_ms),
            imu=imu[i],
            ecg=ecg[i],
            context=contexts[i] or None,
            br_bpm=float(row.br_bpm),
            ve_lpm=float(row.ve_lpm),
            subject_id=subjects[i],
        )
        for i, row in enumerate(frame.itertuples(index=False))
    ]


def write_frame(frame, path):
    """Write a CSV with full float precision; returns its SHA-256 fingerprint."""
    text = frame.to_csv(index=False, float_format='%.17g', lineterminator='\n')
    data = text.encode('utf-8')
    with open(path, 'wb') as handle:
        handle.write(data)
    return hashlib.sha256(data).hexdigest()


def read_instances(path):
    frame = pd.read_csv(path, keep_default_na=False, na_values=[''], dtype={'subject_id': str, 'context': str})
    return frame_to_instances(frame)


def write_feature_tables(instances, directory):
    """
    Write instances.csv plus the per-sensor ecg_features.csv and imu_features.csv.

    Returns a mapping file name -> SHA-256 fingerprint.
    """
    frame = instances_to_frame(instances)
    imu_names = imu_names_for(instances[0].imu.size) if instances else IMU_FEATURE_NAMES
    fingerprints = {'instances.csv': write_frame(frame, directory / 'instances.csv')}
    for name, columns in (('ecg_features.csv', ECG_FEATURE_NAMES), ('imu_features.csv', imu_names)):
        table = frame.loc[:, ['t_center_ms', *columns]]
        fingerprints[name] = write_frame(table, directory / name)
    return fingerprints
