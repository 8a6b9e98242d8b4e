"""
Synthetic cardio-respiratory sessions with planted ground truth.

The ECG is a train of Gaussian-bump beats (Q, R, S, T). Breathing rate and
ventilation follow slow trajectories per activity, and each activity links one
morphology parameter linearly to the standardized BR and another to VE. The IMU
is band-limited noise whose centre frequency and amplitude depend on the activity.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, Tuple

import numpy as np
import pandas as pd

from . import dsp
from .data_io import window_response
from .exceptions import BadConfig
from .seeding import substream
from .streams import ActivityInterval, ResponseSeries, SensorStream

logger = logging.getLogger(__name__)

MODULATED_PARAMETERS = ('r_mag', 'r_width', 't_mag', 't_width', 'qs_dist', 'bpm')
IMU_CHANNELS = ('ax_g', 'ay_g', 'az_g', 'gx_dps', 'gy_dps', 'gz_dps')
AXIS_WEIGHTS = (1.0, 0.7, 0.5)


@dataclass(frozen=True)
class ActivityProfile:
    hr_bpm: float
    br_bpm: float
    ve_lpm: float
    imu_freq_hz: float
    accel_g: float
    gyro_dps: float
    br_spread: float = 0.15
    ve_spread: float = 0.15


@dataclass(frozen=True)
class BeatTemplate:
    """Bump amplitudes (mV), centre offsets from R (ms, T at RR = 1 s) and widths (sigma, ms)."""

    r_amp: float = 1.0
    r_sigma_ms: float = 10.0
    q_amp: float = -0.15
    q_offset_ms: float = 40.0
    q_sigma_ms: float = 8.0
    s_amp: float = -0.3
    s_offset_ms: float = 40.0
    s_sigma_ms: float = 8.0
    t_amp: float = 0.3
    t_offset_ms: float = 250.0
    t_sigma_ms: float = 40.0


def default_profiles():
    return {
        'rest': ActivityProfile(65.0, 12.0, 8.0, 0.2, 0.02, 2.0),
        'walk': ActivityProfile(95.0, 18.0, 20.0, 1.8, 0.3, 40.0),
        'run': ActivityProfile(150.0, 32.0, 60.0, 2.8, 0.9, 120.0),
        'bike': ActivityProfile(120.0, 24.0, 35.0, 1.2, 0.1, 15.0),
        'wave': ActivityProfile(85.0, 15.0, 14.0, 0.8, 0.6, 150.0),
    }


def default_modulation():
    return {
        'rest': {'br': 'r_mag', 've': 't_mag'},
        'walk': {'br': 'r_width', 've': 't_width'},
        'run': {'br': 'r_mag', 've': 't_width'},
        'bike': {'br': 't_mag', 've': 'r_mag'},
        'wave': {'br': 'r_width', 've': 't_mag'},
    }


DEFAULT_PROTOCOL = (('rest', 120.0), ('walk', 120.0), ('run', 120.0), ('bike', 120.0), ('wave', 120.0))


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    protocol: Tuple[Tuple[str, float], ...] = DEFAULT_PROTOCOL
    profiles: Dict[str, ActivityProfile] = field(default_factory=default_profiles)
    modulation: Dict[str, Dict[str, str]] = field(default_factory=default_modulation)
    template: BeatTemplate = field(default_factory=BeatTemplate)
    modulation_gain: float = 0.15
    morph_jitter: float = 0.01
    rr_jitter: float = 0.005
    rsa_depth: float = 0.04
    ecg_noise_mv: float = 0.0
    wander_mv: float = 0.0
    resp_noise: float = 0.0
    label_delay_s: float = 0.0
    ecg_rate_hz: float = 250.0
    imu_rate_hz: float = 50.0
    resp_rate_hz: float = 1.0
    t0_ms: int = 0
    subject_spread: float = 0.05

    def validate(self):
        if self.ecg_rate_hz <= 50.0 or self.imu_rate_hz <= 40.0 or self.resp_rate_hz <= 0:
            raise BadConfig("ECG rate must exceed 50 Hz, IMU rate 40 Hz and resp rate 0 Hz")
        if not self.protocol:
            raise BadConfig("Protocol lists no activities")
        for activity, duration in self.protocol:
            if activity not in self.profiles:
                raise BadConfig(f"No profile for activity '{activity}'")
            if duration <= 0:
                raise BadConfig(f"Activity '{activity}' has non-positive duration")
            for target, parameter in self.modulation.get(activity, {}).items():
                if target not in ('br', 've'):
                    raise BadConfig(f"Modulation target '{target}' is not br or ve")
                if parameter not in MODULATED_PARAMETERS:
                    raise BadConfig(f"Unknown modulated parameter '{parameter}' for {activity}")
        for profile in self.profiles.values():
            if min(profile.hr_bpm, profile.br_bpm, profile.ve_lpm, profile.imu_freq_hz) <= 0:
                raise BadConfig("Activity rates must be positive")
        if self.label_delay_s < 0 or self.modulation_gain < 0:
            raise BadConfig("label_delay_s and modulation_gain must be non-negative")
        return self

    @property
    def duration_s(self):
        return float(sum(d for _, d in self.protocol))

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SynthSession:
    subject_id: str
    ecg: SensorStream
    imu: SensorStream
    resp: ResponseSeries
    intervals: Tuple[ActivityInterval, ...]
    truth: dict


def _segments(cfg):
    bounds = []
    start = 0.0
    for activity, duration in cfg.protocol:
        bounds.append((start, start + duration, activity))
        start += duration
    return bounds


def _trajectory(rng, bounds):
    """Slow zero-mean unit-scale curve per segment, as a function of time in seconds."""
    parts = []
    for start, end, _ in bounds:
        periods = rng.uniform(40.0, 90.0, size=2)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=2)
        parts.append((start, end, periods, phases))

    def z(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros_like(t)
        for start, end, periods, phases in parts:
            inside = (t >= start) & (t < end)
            local = t[inside] - start
            out[inside] = sum(np.sin(2.0 * np.pi * local / p + ph) for p, ph in zip(periods, phases))
        return out
    return z


def _activity_at(bounds, t):
    for start, end, activity in bounds:
        if start <= t < end:
            return activity
    return bounds[-1][2]


def render_ecg(n_samples, rate_hz, beats):
    """
    Sum of Gaussian bumps. ``beats`` holds dicts with r_idx and the bump parameters
    (``*_amp``, ``*_center`` in samples, ``*_sigma`` in samples) for q, r, s and t.
    """
    x = np.zeros(n_samples)
    for beat in beats:
        reach = beat['t_center'] - beat['r_idx'] + 4.0 * beat['t_sigma']
        lo = max(0, int(beat['r_idx'] - 4.0 * beat['q_sigma'] - (beat['r_idx'] - beat['q_center'])) - 1)
        hi = min(n_samples, int(beat['r_idx'] + reach) + 2)
        n = np.arange(lo, hi, dtype=float)
        for wave in ('q', 'r', 's', 't'):
            x[lo:hi] += beat[f'{wave}_amp'] * np.exp(
                -0.5 * ((n - beat[f'{wave}_center']) / beat[f'{wave}_sigma']) ** 2
            )
    return x


def _plan_beats(cfg, bounds, z_br, z_ve, hr_scale, rng):
    rate = cfg.ecg_rate_hz
    tpl = cfg.template
    total = cfg.duration_s
    ms = rate / 1000.0
    beats = []
    t = 0.3
    while True:
        activity = _activity_at(bounds, t)
        profile = cfg.profiles[activity]
        mapping = cfg.modulation.get(activity, {})
        factors = {p: 1.0 for p in MODULATED_PARAMETERS}
        zb, zv = float(z_br(t)[0]), float(z_ve(t)[0])
        for target, z in (('br', zb), ('ve', zv)):
            if target in mapping:
                factors[mapping[target]] *= max(0.2, 1.0 + cfg.modulation_gain * z)

        hr = profile.hr_bpm * hr_scale * factors['bpm']
        br = max(1.0, profile.br_bpm * (1.0 + profile.br_spread * zb))
        rr_s = 60.0 / hr
        r_idx = int(round(t * rate))
        jitter = 1.0 + cfg.morph_jitter * rng.standard_normal(4)
        t_offset_ms = tpl.t_offset_ms * math.sqrt(rr_s)
        t_sigma_ms = tpl.t_sigma_ms * factors['t_width'] * jitter[3]
        qs_factor = factors['qs_dist']
        beat = {
            'r_idx': r_idx,
            'activity': activity,
            'r_amp': tpl.r_amp * factors['r_mag'] * jitter[0],
            'r_center': float(r_idx),
            'r_sigma': tpl.r_sigma_ms * factors['r_width'] * jitter[1] * ms,
            'q_amp': tpl.q_amp,
            'q_center': r_idx - tpl.q_offset_ms * qs_factor * ms,
            'q_sigma': tpl.q_sigma_ms * ms,
            's_amp': tpl.s_amp,
            's_center': r_idx + tpl.s_offset_ms * qs_factor * ms,
            's_sigma': tpl.s_sigma_ms * ms,
            't_amp': tpl.t_amp * factors['t_mag'] * jitter[2],
            't_center': r_idx + t_offset_ms * ms,
            't_sigma': t_sigma_ms * ms,
        }
        if beat['t_center'] + 4.0 * beat['t_sigma'] >= total * rate:
            break
        beats.append(beat)

        rsa = 1.0 + cfg.rsa_depth * math.sin(2.0 * np.pi * br / 60.0 * t)
        t += rr_s * rsa * (1.0 + cfg.rr_jitter * rng.standard_normal())
    return beats


def _imu_segment(rng, profile, n, rate):
    out = np.empty((n, 6))
    f0 = profile.imu_freq_hz
    lo, hi = max(0.05, 0.7 * f0), min(1.3 * f0, 0.45 * rate)
    for c in range(6):
        noise = rng.standard_normal(n)
        band = dsp.bandpass(noise, lo, hi, rate)
        std = band.std()
        band = band / std if std > 0 else band
        amplitude = profile.accel_g if c < 3 else profile.gyro_dps
        out[:, c] = amplitude * AXIS_WEIGHTS[c % 3] * band
    out[:, 2] += 1.0
    out += 0.002 * rng.standard_normal(out.shape) * np.array([1, 1, 1, 100, 100, 100])
    return out


def _finite_or_none(value):
    return value if math.isfinite(value) else None


def gen_session(cfg, subject_id='S01'):
    """
    Generate one session.

    Returns:
        SynthSession with ECG, IMU and spirometer streams, activity intervals and a
        truth dict (planted beats, fiducial offsets, per-window BR/VE, intervals).

    Raises:
        BadConfig: invalid configuration.
    """
    cfg.validate()
    bounds = _segments(cfg)
    seed = cfg.seed
    hr_scale = 1.0 + cfg.subject_spread * float(substream(seed, 'synth', subject_id, 'subject').standard_normal())
    traj_rng = substream(seed, 'synth', subject_id, 'trajectory')
    z_br = _trajectory(traj_rng, bounds)
    z_ve = _trajectory(traj_rng, bounds)

    beats = _plan_beats(cfg, bounds, z_br, z_ve, hr_scale, substream(seed, 'synth', subject_id, 'morphology'))
    n_ecg = int(round(cfg.duration_s * cfg.ecg_rate_hz))
    ecg = render_ecg(n_ecg, cfg.ecg_rate_hz, beats)
    noise_rng = substream(seed, 'synth', subject_id, 'beats')
    if cfg.wander_mv:
        t = np.arange(n_ecg) / cfg.ecg_rate_hz
        ecg += cfg.wander_mv * np.sin(2.0 * np.pi * 0.3 * t + noise_rng.uniform(0, 2 * np.pi))
    if cfg.ecg_noise_mv:
        ecg += cfg.ecg_noise_mv * noise_rng.standard_normal(n_ecg)

    imu_rng = substream(seed, 'synth', subject_id, 'imu')
    imu_parts = []
    for start, end, activity in bounds:
        n = int(round(end * cfg.imu_rate_hz)) - int(round(start * cfg.imu_rate_hz))
        imu_parts.append(_imu_segment(imu_rng, cfg.profiles[activity], n, cfg.imu_rate_hz))
    imu = np.vstack(imu_parts)

    resp_rng = substream(seed, 'synth', subject_id, 'resp')
    resp_t, resp_br, resp_ve, clean_br, clean_ve = [], [], [], [], []
    for start, end, activity in bounds:
        profile = cfg.profiles[activity]
        t = np.arange(start + cfg.label_delay_s, end, 1.0 / cfg.resp_rate_hz)
        br = np.maximum(0.0, profile.br_bpm * (1.0 + profile.br_spread * z_br(t)))
        ve = np.maximum(0.0, profile.ve_lpm * (1.0 + profile.ve_spread * z_ve(t)))
        resp_t.append(t)
        clean_br.append(br)
        clean_ve.append(ve)
        if cfg.resp_noise:
            br = np.maximum(0.0, br + cfg.resp_noise * resp_rng.standard_normal(t.size))
            ve = np.maximum(0.0, ve + cfg.resp_noise * resp_rng.standard_normal(t.size))
        resp_br.append(br)
        resp_ve.append(ve)
    t_ms = cfg.t0_ms + np.round(np.concatenate(resp_t) * 1000.0)
    resp = ResponseSeries(t_ms, np.concatenate(resp_br), np.concatenate(resp_ve))
    clean = ResponseSeries(t_ms, np.concatenate(clean_br), np.concatenate(clean_ve))

    intervals = tuple(
        ActivityInterval(cfg.t0_ms + int(round(start * 1000)), cfg.t0_ms + int(round(end * 1000)), activity)
        for start, end, activity in bounds
    )
    ecg_stream = SensorStream(('lead1_mv',), ecg, cfg.ecg_rate_hz, cfg.t0_ms)
    imu_stream = SensorStream(IMU_CHANNELS, imu, cfg.imu_rate_hz, cfg.t0_ms)

    truth = {
        'subject_id': subject_id,
        'seed': seed,
        'ecg_rate_hz': cfg.ecg_rate_hz,
        'beats': [
            {
                'r_idx': b['r_idx'],
                'activity': b['activity'],
                'q_offset_ms': (b['r_center'] - b['q_center']) * 1000.0 / cfg.ecg_rate_hz,
                's_offset_ms': (b['s_center'] - b['r_center']) * 1000.0 / cfg.ecg_rate_hz,
                't_offset_ms': (b['t_center'] - b['r_center']) * 1000.0 / cfg.ecg_rate_hz,
                'r_amp': b['r_amp'],
                'r_sigma_ms': b['r_sigma'] * 1000.0 / cfg.ecg_rate_hz,
                't_amp': b['t_amp'],
                't_sigma_ms': b['t_sigma'] * 1000.0 / cfg.ecg_rate_hz,
            }
            for b in beats
        ],
        'windows': [
            {'t_center_ms': w.t_center_ms, 'br': _finite_or_none(w.br_mean), 've': _finite_or_none(w.ve_mean)}
            for w in window_response(clean, t0_ms=cfg.t0_ms, duration_s=cfg.duration_s)
        ],
        'intervals': [[i.start_ms, i.end_ms, i.activity] for i in intervals],
        'modulation': {a: dict(m) for a, m in cfg.modulation.items()},
    }
    logger.info(
        f"Synthesized session {subject_id}: {len(beats)} beats, {cfg.duration_s:.0f} s, "
        f"{len(intervals)} activities"
    )
    return SynthSession(subject_id, ecg_stream, imu_stream, resp, intervals, truth)


def gen_sessions(cfg, n_subjects=1):
    return [gen_session(cfg, f"S{k + 1:02d}") for k in range(n_subjects)]


def _stream_frame(stream):
    t = stream.t_ms
    t_col = t.astype(np.int64) if np.allclose(t, np.round(t)) else t
    frame = pd.DataFrame(stream.data, columns=list(stream.channel_names))
    frame.insert(0, 't_ms', t_col)
    return frame


def _write_csv(frame, path, float_format):
    path.write_text(frame.to_csv(index=False, float_format=float_format, lineterminator='\n'), encoding='utf-8')


def write_session(session, directory):
    """
    Write a session in the loader's CSV layout plus truth.json and manifest.json.

    Returns the manifest path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    _write_csv(_stream_frame(session.ecg), directory / 'ecg.csv', '%.6f')
    _write_csv(_stream_frame(session.imu), directory / 'imu.csv', '%.6f')
    resp = pd.DataFrame({
        't_ms': session.resp.t_ms.astype(np.int64),
        'br_bpm': session.resp.br_bpm,
        've_lpm': session.resp.ve_lpm,
    })
    _write_csv(resp, directory / 'resp.csv', '%.6f')
    labels = pd.DataFrame(
        [(i.start_ms, i.end_ms, i.activity) for i in session.intervals],
        columns=['start_ms', 'end_ms', 'activity'],
    )
    _write_csv(labels, directory / 'labels.csv', None)

    (directory / 'truth.json').write_text(json.dumps(session.truth, indent=2, sort_keys=True), encoding='utf-8')
    manifest = {
        'subject_id': session.subject_id,
        'ecg_path': 'ecg.csv',
        'imu_path': 'imu.csv',
        'resp_path': 'resp.csv',
        'labels_path': 'labels.csv',
    }
    manifest_path = directory / 'manifest.json'
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding='utf-8')
    return manifest_path


def with_protocol(cfg, protocol):
    return replace(cfg, protocol=tuple((a, float(d)) for a, d in protocol))
