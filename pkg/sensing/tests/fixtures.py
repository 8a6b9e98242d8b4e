"""
Shared builders for sensing tests.
"""

import numpy as np

from sensing.streams import SensorStream, Window
from sensing.synth import ActivityProfile, SynthConfig


def clean_config(hr_bpm=60.0, duration_s=15.0, modulation=None, **overrides):
    """Single 'rest' segment with no jitter, RSA or noise."""
    profile = ActivityProfile(hr_bpm, 12.0, 8.0, 0.2, 0.02, 2.0, br_spread=0.0, ve_spread=0.0)
    options = dict(
        seed=7,
        protocol=(('rest', float(duration_s)),),
        profiles={'rest': profile},
        modulation=modulation or {},
        morph_jitter=0.0,
        rr_jitter=0.0,
        rsa_depth=0.0,
        subject_spread=0.0,
    )
    options.update(overrides)
    return SynthConfig(**options)


def ecg_window(signal, rate_hz=250.0, t_start_ms=0):
    signal = np.asarray(signal, dtype=float)
    return Window(
        samples=signal[:, None],
        t_start_ms=t_start_ms,
        t_center_ms=t_start_ms + int(round(signal.size * 500.0 / rate_hz)),
        rate_hz=rate_hz,
        channel_names=('lead1_mv',),
    )


def imu_window(samples, rate_hz=50.0):
    samples = np.asarray(samples, dtype=float)
    return Window(
        samples=samples,
        t_start_ms=0,
        t_center_ms=int(round(samples.shape[0] * 500.0 / rate_hz)),
        rate_hz=rate_hz,
        channel_names=('ax_g', 'ay_g', 'az_g', 'gx_dps', 'gy_dps', 'gz_dps'),
    )


def constant_stream(n_samples, rate_hz=250.0, t0_ms=0, channels=('lead1_mv',)):
    return SensorStream(channels, np.zeros((n_samples, len(channels))), rate_hz, t0_ms)
