"""
Windowing and filtering primitives shared by the ECG and IMU feature extractors.

All filters are length-preserving and operate on 1-D numpy vectors.
"""

import logging

import numpy as np
from scipy import ndimage, signal

from .exceptions import BadBand, BadConfig, BadKernel, StreamTooShort
from .streams import Window

logger = logging.getLogger(__name__)

FILTER_ORDER = 4


def sliding_windows(stream, win_s=15.0, step_s=3.0):
    """
    Cut ``stream`` into windows of ``win_s`` seconds emitted every ``step_s`` seconds.

    Returns a list of Window; window k starts at t0 + k * step_s.
    """
    n_win = int(round(win_s * stream.rate_hz))
    n_step = int(round(step_s * stream.rate_hz))
    if n_step <= 0 or n_win <= 0:
        raise BadConfig(f"Window ({win_s} s) and step ({step_s} s) must be positive")
    if stream.n_samples < n_win:
        raise StreamTooShort(
            f"Stream lasts {stream.duration_s:.2f} s, shorter than the {win_s} s window"
        )

    count = (stream.n_samples - n_win) // n_step + 1
    windows = []
    for k in range(count):
        start = k * n_step
        t_start = stream.t0_ms + int(round(k * step_s * 1000.0))
        windows.append(Window(
            samples=stream.data[start:start + n_win],
            t_start_ms=t_start,
            t_center_ms=t_start + int(round(win_s * 500.0)),
            rate_hz=stream.rate_hz,
            channel_names=stream.channel_names,
        ))
    logger.debug(f"Cut {count} windows of {n_win} samples from {stream.n_samples} samples")
    return windows


def level_clip(x, lo, hi):
    if not lo < hi:
        raise BadConfig(f"Clip limits must satisfy lo < hi, got {lo}, {hi}")
    return np.clip(np.asarray(x, dtype=float), lo, hi)


def median_filter(x, k=5):
    """Running median over an odd kernel ``k``; edges replicate the end samples."""
    x = np.asarray(x, dtype=float)
    if k < 1 or k % 2 == 0:
        raise BadKernel(f"Median kernel must be a positive odd integer, got {k}")
    if k > x.size:
        raise BadKernel(f"Median kernel {k} is longer than the signal ({x.size} samples)")
    return ndimage.median_filter(x, size=k, mode='nearest')


def detrend_linear(x):
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise StreamTooShort("Linear detrend needs at least two samples")
    return signal.detrend(x, type='linear')


def _check_band(lo_hz, hi_hz, rate_hz):
    if not (0 <= lo_hz < hi_hz < rate_hz / 2.0):
        raise BadBand(
            f"Band [{lo_hz}, {hi_hz}] Hz is invalid for a {rate_hz} Hz sampling rate"
        )


def bandpass(x, lo_hz, hi_hz, rate_hz):
    """
    Zero-phase Butterworth band-pass (forward-backward, reflection-padded).

    ``lo_hz == 0`` degrades to a low-pass at ``hi_hz``.
    """
    _check_band(lo_hz, hi_hz, rate_hz)
    x = np.asarray(x, dtype=float)
    if lo_hz == 0:
        sos = signal.butter(FILTER_ORDER, hi_hz, btype='lowpass', fs=rate_hz, output='sos')
    else:
        sos = signal.butter(FILTER_ORDER, [lo_hz, hi_hz], btype='bandpass', fs=rate_hz, output='sos')
    padlen = min(x.size - 1, 3 * (2 * sos.shape[0] + 1))
    return signal.sosfiltfilt(sos, x, padtype='even', padlen=padlen)


def teager_energy(x):
    """Teager-Kaiser operator x[i]^2 - x[i-1] x[i+1]; the end samples copy their neighbours."""
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        raise StreamTooShort("Teager energy needs at least three samples")
    y = np.empty_like(x)
    y[1:-1] = x[1:-1] ** 2 - x[:-2] * x[2:]
    y[0] = y[1]
    y[-1] = y[-2]
    return y


def band_power(x, lo_hz, hi_hz, rate_hz):
    """Power in [lo_hz, hi_hz) from the periodogram; ``hi_hz`` may equal Nyquist."""
    if not (0 <= lo_hz < hi_hz <= rate_hz / 2.0):
        raise BadBand(
            f"Band [{lo_hz}, {hi_hz}) Hz is invalid for a {rate_hz} Hz sampling rate"
        )
    freqs, pxx = signal.periodogram(np.asarray(x, dtype=float), fs=rate_hz, detrend=False)
    if hi_hz >= rate_hz / 2.0:
        mask = freqs >= lo_hz
    else:
        mask = (freqs >= lo_hz) & (freqs < hi_hz)
    df = freqs[1] - freqs[0] if freqs.size > 1 else 0.0
    return float(np.sum(pxx[mask]) * df)


def mean_crossing_rate(x, rate_hz=1.0):
    """Crossings of the window mean per second."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return 0.0
    centered = x - x.mean()
    # Samples sitting exactly on the mean are not crossings.
    tol = 1e-12 * max(1.0, np.max(np.abs(x)))
    sign = np.sign(np.where(np.abs(centered) <= tol, 0.0, centered))
    nonzero = sign[sign != 0]
    crossings = np.count_nonzero(nonzero[1:] != nonzero[:-1])
    return float(crossings / (x.size / rate_hz))
