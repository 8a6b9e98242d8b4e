"""
Activity features for 6-channel IMU windows (3-axis accelerometer, 3-axis gyroscope).

Raw layout, 96 slots:
    42  per channel: mean, max, median, std, rms, variance, iqr
    12  per within-sensor axis pair: pearson correlation, joint entropy
    24  per channel: band power 0.01-0.5 Hz, 0.5-3 Hz, above 3 Hz, mean-crossing rate
    18  per channel: teager mean, max, variance

The exported vector applies ``EXPORT_MASK`` (90 slots by default: the joint entropy
slots are left out).
"""

import logging
from itertools import combinations

import numpy as np

from . import dsp
from .exceptions import WrongChannelCount

logger = logging.getLogger(__name__)

IMU_CHANNELS = ('ax_g', 'ay_g', 'az_g', 'gx_dps', 'gy_dps', 'gz_dps')
ACCEL_LIMIT_G = 4.0
GYRO_LIMIT_DPS = 360.0
ENTROPY_BINS = 16

STAT_NAMES = ('mean', 'max', 'median', 'std', 'rms', 'var', 'iqr')
SPECTRAL_NAMES = ('bp_low', 'bp_mid', 'bp_high', 'mcr')
TEAGER_NAMES = ('teager_mean', 'teager_max', 'teager_var')
BANDS_HZ = ((0.01, 0.5), (0.5, 3.0), (3.0, None))
PAIRS = tuple(combinations(range(3), 2)) + tuple((a + 3, b + 3) for a, b in combinations(range(3), 2))


def _raw_names():
    names = [f"{IMU_CHANNELS[c]}_{s}" for c in range(6) for s in STAT_NAMES]
    for a, b in PAIRS:
        pair = f"{IMU_CHANNELS[a]}__{IMU_CHANNELS[b]}"
        names += [f"{pair}_corr", f"{pair}_entropy"]
    names += [f"{IMU_CHANNELS[c]}_{s}" for c in range(6) for s in SPECTRAL_NAMES]
    names += [f"{IMU_CHANNELS[c]}_{s}" for c in range(6) for s in TEAGER_NAMES]
    return tuple(names)


RAW_FEATURE_NAMES = _raw_names()
EXPORT_MASK = np.array([not name.endswith('_entropy') for name in RAW_FEATURE_NAMES])
IMU_FEATURE_NAMES = tuple(n for n, keep in zip(RAW_FEATURE_NAMES, EXPORT_MASK) if keep)


def preprocess_imu(samples, rate_hz, median_k=5, band=(0.01, 20.0)):
    """Clip to the sensor range, median filter, then band-pass every channel."""
    out = np.empty_like(np.asarray(samples, dtype=float))
    hi = min(band[1], 0.45 * rate_hz)
    for c in range(samples.shape[1]):
        limit = ACCEL_LIMIT_G if c < 3 else GYRO_LIMIT_DPS
        x = dsp.level_clip(samples[:, c], -limit, limit)
        x = dsp.median_filter(x, median_k)
        out[:, c] = dsp.bandpass(x, band[0], hi, rate_hz)
    return out


def pearson(x, y):
    sx, sy = np.std(x), np.std(y)
    if sx <= 1e-12 or sy <= 1e-12:
        return 0.0
    r = float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))
    return float(np.clip(r, -1.0, 1.0))


def joint_entropy(x, y, bins=ENTROPY_BINS):
    """Shannon entropy (nats) of the 2-D histogram of the standardized pair."""
    sx, sy = np.std(x), np.std(y)
    if sx <= 1e-12 or sy <= 1e-12:
        return 0.0
    counts, _, _ = np.histogram2d((x - x.mean()) / sx, (y - y.mean()) / sy, bins=bins)
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def _channel_stats(x):
    q75, q25 = np.percentile(x, [75, 25])
    return [
        x.mean(), x.max(), np.median(x), x.std(),
        np.sqrt(np.mean(x ** 2)), x.var(), q75 - q25,
    ]


def _channel_spectral(x, rate_hz):
    nyquist = rate_hz / 2.0
    powers = [dsp.band_power(x, lo, nyquist if hi is None else hi, rate_hz) for lo, hi in BANDS_HZ]
    return powers + [dsp.mean_crossing_rate(x, rate_hz)]


def _channel_teager(x):
    energy = dsp.teager_energy(x)
    return [energy.mean(), energy.max(), energy.var()]


def raw_imu_features(samples, rate_hz):
    samples = np.asarray(samples, dtype=float)
    values = []
    for c in range(6):
        values += _channel_stats(samples[:, c])
    for a, b in PAIRS:
        values += [pearson(samples[:, a], samples[:, b]), joint_entropy(samples[:, a], samples[:, b])]
    for c in range(6):
        values += _channel_spectral(samples[:, c], rate_hz)
    for c in range(6):
        values += _channel_teager(samples[:, c])
    return np.asarray(values, dtype=float)


def extract_imu_features(win, preprocess=True, mask=None, median_k=5, band=(0.01, 20.0)):
    """
    Feature vector for one IMU window.

    Args:
        win (Window): window with 6 channels in ``IMU_CHANNELS`` order.
        preprocess: apply clip, median and band-pass before measuring.
        mask: boolean selector over the 96 raw slots; ``EXPORT_MASK`` when None.

    Raises:
        WrongChannelCount: window does not carry exactly 6 channels.
    """
    samples = np.asarray(win.samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 6:
        raise WrongChannelCount(
            f"IMU window needs 6 channels, got {samples.shape[1] if samples.ndim == 2 else 1}"
        )
    if preprocess:
        samples = preprocess_imu(samples, win.rate_hz, median_k=median_k, band=band)
    values = raw_imu_features(samples, win.rate_hz)
    values = np.nan_to_num(values, nan=0.0, posinf=0.0, neginf=0.0)
    return values[EXPORT_MASK if mask is None else np.asarray(mask, dtype=bool)]
