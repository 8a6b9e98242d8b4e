"""
Session loading, validation and time alignment.

A session is described by a manifest (JSON or TOML) pointing at four CSV files:

    ECG     t_ms,lead1_mv[,lead2_mv,lead3_mv]
    IMU     t_ms,ax_g,ay_g,az_g,gx_dps,gy_dps,gz_dps
    resp    t_ms,br_bpm,ve_lpm
    labels  start_ms,end_ms,activity
"""

import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections import namedtuple
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import (
    BadConfig,
    EmptySeries,
    EmptyStream,
    MissingFile,
    NonMonotonicTimestamps,
    SchemaMismatch,
)
from .streams import ActivityInterval, ResponseSeries, SensorStream, SessionManifest

logger = logging.getLogger(__name__)

DEFAULT_CONTEXTS = ('rest', 'walk', 'run', 'bike', 'wave')

ECG_COLUMNS = ('t_ms', 'lead1_mv', 'lead2_mv', 'lead3_mv')
IMU_COLUMNS = ('t_ms', 'ax_g', 'ay_g', 'az_g', 'gx_dps', 'gy_dps', 'gz_dps')
RESP_COLUMNS = ('t_ms', 'br_bpm', 've_lpm')
LABEL_COLUMNS = ('start_ms', 'end_ms', 'activity')

ResponseWindow = namedtuple('ResponseWindow', ['t_center_ms', 'br_mean', 've_mean'])


def load_manifest(path):
    """Read a session manifest; relative file paths resolve against its directory."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"Manifest not found: {path}")

    raw = path.read_bytes()
    try:
        if path.suffix.lower() == '.toml':
            payload = tomllib.loads(raw.decode('utf-8'))
        else:
            payload = json.loads(raw.decode('utf-8'))
    except (ValueError, tomllib.TOMLDecodeError) as e:
        raise SchemaMismatch(f"Manifest {path} is not valid: {str(e)}")

    required = ('subject_id', 'ecg_path', 'imu_path', 'resp_path', 'labels_path')
    missing = [key for key in required if key not in payload]
    if missing:
        raise SchemaMismatch(f"Manifest {path} lacks fields: {', '.join(missing)}")

    def resolve(value):
        candidate = Path(value)
        return str(candidate if candidate.is_absolute() else path.parent / candidate)

    intervals = tuple(
        ActivityInterval(int(start), int(end), str(activity))
        for start, end, activity in payload.get('activity_intervals', [])
    )
    return SessionManifest(
        subject_id=str(payload['subject_id']),
        ecg_path=resolve(payload['ecg_path']),
        imu_path=resolve(payload['imu_path']),
        resp_path=resolve(payload['resp_path']),
        labels_path=resolve(payload['labels_path']),
        activity_intervals=intervals,
        source=str(path),
    )


def load_study(path):
    """
    Session manifests named by ``path``.

    A study manifest holds ``{"sessions": [<manifest path>, ...]}``; any other
    manifest is read as a single session.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"Manifest not found: {path}")
    if path.suffix.lower() == '.json':
        try:
            payload = json.loads(path.read_text(encoding='utf-8'))
        except ValueError as e:
            raise SchemaMismatch(f"Manifest {path} is not valid: {str(e)}")
        if isinstance(payload, dict) and 'sessions' in payload:
            return [load_manifest(path.parent / entry) for entry in payload['sessions']]
    return [load_manifest(path)]


def write_study(manifest_paths, path):
    path = Path(path)
    entries = [str(Path(p).relative_to(path.parent)) for p in manifest_paths]
    path.write_text(json.dumps({'sessions': entries}, indent=2), encoding='utf-8')
    return path


def _read_csv(path, kind):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"{kind} file not found: {path}")
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise EmptyStream(f"{kind} file {path} is empty")
    frame.columns = [str(c).strip() for c in frame.columns]
    return frame


def _check_columns(frame, expected, kind, optional_tail=0):
    columns = tuple(frame.columns)
    allowed = [expected[:len(expected) - k] for k in range(optional_tail + 1)]
    if columns not in allowed:
        raise SchemaMismatch(
            f"{kind} header {','.join(columns)} does not match {','.join(expected)}"
        )


def _numeric_columns(frame, columns, what):
    """Float matrix of ``columns``; any blank or non-numeric cell is a schema error."""
    values = frame.loc[:, list(columns)].apply(pd.to_numeric, errors='coerce')
    bad = [c for c in columns if values[c].isna().any()]
    if bad:
        raise SchemaMismatch(f"{what} has non-numeric values in {', '.join(bad)}")
    return values.to_numpy(dtype=float)


def _check_timestamps(t, kind):
    if t.size and np.any(np.diff(t) <= 0):
        raise NonMonotonicTimestamps(f"{kind} timestamps are not strictly increasing")


def _repair_channels(frame, columns, kind):
    """Interpolate isolated gaps; a channel with no usable samples is rejected."""
    values = frame.loc[:, list(columns)].apply(pd.to_numeric, errors='coerce')
    for column in columns:
        if values[column].isna().all():
            raise EmptyStream(f"{kind} channel {column} has no valid samples")
    n_missing = int(values.isna().sum().sum())
    if n_missing:
        logger.warning(f"Repairing {n_missing} missing {kind} samples by interpolation")
        values = values.interpolate(limit_direction='both')
    return values.to_numpy(dtype=float)


def _stream_from_frame(frame, channel_columns, kind):
    if frame.empty:
        raise EmptyStream(f"{kind} stream has no samples")
    t = pd.to_numeric(frame['t_ms'], errors='coerce').to_numpy(dtype=float)
    if np.isnan(t).any():
        raise SchemaMismatch(f"{kind} timestamps contain non-numeric values")
    _check_timestamps(t, kind)
    if t.size < 2:
        raise EmptyStream(f"{kind} stream needs at least two samples to infer its rate")
    rate_hz = 1000.0 / float(np.median(np.diff(t)))
    data = _repair_channels(frame, channel_columns, kind)
    return SensorStream(tuple(channel_columns), data, rate_hz, int(round(t[0])))


def load_ecg(path):
    frame = _read_csv(path, 'ECG')
    _check_columns(frame, ECG_COLUMNS, 'ECG', optional_tail=2)
    return _stream_from_frame(frame, tuple(frame.columns[1:]), 'ECG')


def load_imu(path):
    frame = _read_csv(path, 'IMU')
    _check_columns(frame, IMU_COLUMNS, 'IMU')
    return _stream_from_frame(frame, IMU_COLUMNS[1:], 'IMU')


def load_response(path):
    frame = _read_csv(path, 'Response')
    _check_columns(frame, RESP_COLUMNS, 'Response')
    if frame.empty:
        raise EmptySeries(f"Response file {path} has no samples")
    values = _numeric_columns(frame, RESP_COLUMNS, f"Response file {path}")
    t = values[:, 0]
    _check_timestamps(t, 'Response')
    if np.any(values[:, 1:] < 0):
        raise SchemaMismatch(f"Response file {path} has negative breathing rate or ventilation")
    return ResponseSeries(t, values[:, 1], values[:, 2])


def load_labels(path, contexts=DEFAULT_CONTEXTS):
    frame = _read_csv(path, 'Labels')
    _check_columns(frame, LABEL_COLUMNS, 'Labels')
    bounds = _numeric_columns(frame, LABEL_COLUMNS[:2], f"Labels file {path}")
    intervals = tuple(
        ActivityInterval(int(start), int(end), str(activity).strip())
        for (start, end), activity in zip(bounds, frame['activity'])
    )
    return validate_intervals(intervals, contexts)


def validate_intervals(intervals, contexts=DEFAULT_CONTEXTS):
    previous_end = None
    for interval in intervals:
        if interval.end_ms <= interval.start_ms:
            raise NonMonotonicTimestamps(
                f"Activity interval {interval.start_ms}-{interval.end_ms} is empty or reversed"
            )
        if previous_end is not None and interval.start_ms < previous_end:
            raise NonMonotonicTimestamps("Activity intervals overlap or are not sorted")
        if interval.activity not in contexts:
            raise SchemaMismatch(
                f"Activity '{interval.activity}' is not one of {', '.join(contexts)}"
            )
        previous_end = interval.end_ms
    return tuple(intervals)


def load_session(manifest, contexts=DEFAULT_CONTEXTS):
    """
    Load and validate one session.

    Args:
        manifest (SessionManifest): paths to the four session files.
        contexts: allowed activity names.

    Returns:
        Tuple (ecg, imu, resp, activity_intervals).
    """
    ecg = load_ecg(manifest.ecg_path)
    imu = load_imu(manifest.imu_path)
    if imu.n_channels != 6:
        raise SchemaMismatch(f"IMU stream must have 6 channels, got {imu.n_channels}")
    resp = load_response(manifest.resp_path)
    if manifest.activity_intervals:
        intervals = validate_intervals(manifest.activity_intervals, contexts)
    else:
        intervals = load_labels(manifest.labels_path, contexts)

    logger.info(
        f"Loaded session {manifest.subject_id}: ECG {ecg.n_samples} samples @ {ecg.rate_hz:.1f} Hz, "
        f"IMU {imu.n_samples} samples, {len(resp)} spirometer samples, {len(intervals)} activities"
    )
    return ecg, imu, resp, intervals


def synchronize(*streams):
    """Trim streams to their common time span."""
    start = max(s.t0_ms for s in streams)
    end = min(s.t0_ms + s.duration_s * 1000.0 for s in streams)
    if end <= start:
        raise EmptyStream("Streams do not overlap in time")

    trimmed = []
    for s in streams:
        first = int(np.ceil((start - s.t0_ms) * s.rate_hz / 1000.0 - 1e-9))
        last = int(np.floor((end - s.t0_ms) * s.rate_hz / 1000.0 + 1e-9))
        if first == 0 and last >= s.n_samples:
            trimmed.append(s)
        else:
            trimmed.append(s.slice_samples(first, min(last, s.n_samples)))
    if any(s.t0_ms != streams[0].t0_ms for s in streams):
        logger.info(f"Trimmed {len(streams)} streams to common span {start}-{int(end)} ms")
    return tuple(trimmed)


def window_count(duration_s, win_s, step_s):
    if duration_s < win_s:
        return 0
    return int(np.floor((duration_s - win_s) / step_s + 1e-9)) + 1


def window_response(resp, win_s=15.0, step_s=3.0, t0_ms=None, duration_s=None):
    """
    Average spirometer samples over sliding windows.

    Window k covers [t0 + k*step, t0 + k*step + win) and shares its center timestamp
    with the k-th sensor window. Windows without samples come back with NaN means.

    Args:
        resp (ResponseSeries): spirometer samples.
        t0_ms: clock origin; defaults to the first sample.
        duration_s: span to cover; defaults to the sample span plus one median interval.

    Returns:
        list of ResponseWindow(t_center_ms, br_mean, ve_mean).
    """
    if resp is None or len(resp) == 0:
        raise EmptySeries("Response series has no samples")
    if not (win_s > step_s > 0):
        raise BadConfig(f"Need win_s > step_s > 0, got {win_s}, {step_s}")

    t = resp.t_ms
    if t0_ms is None:
        t0_ms = int(round(t[0]))
    if duration_s is None:
        spacing = float(np.median(np.diff(t))) if t.size > 1 else 1000.0
        duration_s = (t[-1] - t0_ms + spacing) / 1000.0

    count = window_count(duration_s, win_s, step_s)
    starts = t0_ms + np.array([int(round(k * step_s * 1000.0)) for k in range(count)], dtype=np.int64)
    ends = starts + int(round(win_s * 1000.0))
    lo = np.searchsorted(t, starts, side='left')
    hi = np.searchsorted(t, ends, side='left')

    br_cum = np.concatenate([[0.0], np.cumsum(resp.br_bpm)])
    ve_cum = np.concatenate([[0.0], np.cumsum(resp.ve_lpm)])
    counts = hi - lo
    with np.errstate(invalid='ignore', divide='ignore'):
        br_mean = np.where(counts > 0, (br_cum[hi] - br_cum[lo]) / counts, np.nan)
        ve_mean = np.where(counts > 0, (ve_cum[hi] - ve_cum[lo]) / counts, np.nan)

    n_missing = int(np.count_nonzero(counts == 0))
    if n_missing:
        logger.debug(f"{n_missing} of {count} response windows have no spirometer samples")

    centers = starts + int(round(win_s * 500.0))
    return [
        ResponseWindow(int(c), float(b), float(v))
        for c, b, v in zip(centers, br_mean, ve_mean)
    ]


def window_label(intervals, t_start_ms, t_end_ms):
    """Activity covering the whole window, or None when the window straddles a boundary."""
    for interval in intervals:
        if interval.contains(t_start_ms, t_end_ms):
            return interval.activity
    return None
