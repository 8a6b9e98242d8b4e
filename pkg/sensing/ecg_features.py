"""
Beat detection and morphology features for single-lead ECG windows.

Feature layout (20 values): for each morphology field, in the order of
``MORPHOLOGY_FIELDS``, the mean over the window's beats followed by the std.
"""

import logging
from dataclasses import astuple, dataclass

import numpy as np
from scipy import signal

from . import dsp
from .exceptions import NoBeatsFound, SegmentOutOfBounds

logger = logging.getLogger(__name__)

MORPHOLOGY_FIELDS = (
    'r_mag', 'r_prom', 'r_width_ms', 't_mag', 't_width_ms',
    'qs_dist_ms', 'st_dist_ms', 'bpm', 'r_power', 't_power',
)
ECG_FEATURE_NAMES = tuple(
    f"{name}_{stat}" for name in MORPHOLOGY_FIELDS for stat in ('mean', 'std')
)

LOCKOUT_MS = 200.0
DETECT_FRACTION = 0.7
RESEARCH_FRACTION = 0.5
RR_TOLERANCE = 0.2
QS_SEARCH_MS = 100.0
T_SEARCH_MS = 500.0
R_REFINE_MS = 25.0
MIN_BEATS = 3


@dataclass(frozen=True)
class BeatFiducials:
    r_idx: int
    q_idx: int
    s_idx: int
    t_idx: int


@dataclass(frozen=True)
class BeatMorphology:
    r_mag: float
    r_prom: float
    r_width_ms: float
    t_mag: float
    t_width_ms: float
    qs_dist_ms: float
    st_dist_ms: float
    bpm: float
    r_power: float
    t_power: float


@dataclass(frozen=True)
class EcgFeatureVector:
    values: np.ndarray
    n_beats: int

    def as_dict(self):
        return dict(zip(ECG_FEATURE_NAMES, self.values.tolist()))


def _ms_to_samples(ms, rate_hz):
    return max(1, int(round(ms * rate_hz / 1000.0)))


def preprocess_ecg(x, rate_hz, median_k=3, band=(5.0, 25.0)):
    """
    Returns (detection signal, morphology signal).

    Peaks are detected on the band-passed trace; fiducials and amplitudes are read
    from the median-filtered, detrended trace, which keeps the T wave.
    """
    cleaned = dsp.detrend_linear(dsp.median_filter(x, median_k))
    detection = dsp.bandpass(cleaned, band[0], band[1], rate_hz)
    return detection, cleaned


def detect_r_peaks(x, rate_hz, lockout_ms=LOCKOUT_MS, fraction=DETECT_FRACTION):
    """R peaks above ``fraction`` of the window maximum, at least ``lockout_ms`` apart."""
    x = np.asarray(x, dtype=float)
    top = float(np.max(x)) if x.size else 0.0
    if top <= 0:
        raise NoBeatsFound("ECG window has no positive deflection")
    peaks, _ = signal.find_peaks(
        x, height=fraction * top, distance=_ms_to_samples(lockout_ms, rate_hz),
    )
    if peaks.size < MIN_BEATS:
        raise NoBeatsFound(f"Only {peaks.size} R peaks detected, need {MIN_BEATS}")
    return peaks


def flag_irregular_intervals(r, tolerance=RR_TOLERANCE):
    """Boolean per RR interval: True when it deviates more than ``tolerance`` from the mean."""
    rr = np.diff(np.asarray(r))
    if rr.size == 0:
        return np.zeros(0, dtype=bool)
    mean_rr = rr.mean()
    return np.abs(rr - mean_rr) > tolerance * mean_rr


def correct_missed_peaks(r, x, rate_hz, lockout_ms=LOCKOUT_MS, max_passes=10):
    """
    Repair the R-peak train against the window's mean RR interval.

    Gaps shorter than 80% of the mean lose their smaller peak; gaps longer than
    120% are searched again at half the window maximum.
    """
    x = np.asarray(x, dtype=float)
    peaks = sorted(int(i) for i in r)
    lockout = _ms_to_samples(lockout_ms, rate_hz)
    low_height = RESEARCH_FRACTION * float(np.max(x))

    for _ in range(max_passes):
        if len(peaks) < 2:
            break
        irregular = flag_irregular_intervals(peaks)
        if not irregular.any():
            break
        changed = False
        rr = np.diff(peaks)
        short = np.flatnonzero(irregular & (rr < rr.mean()))
        if short.size:
            i = int(short[0])
            drop = i if x[peaks[i]] < x[peaks[i + 1]] else i + 1
            del peaks[drop]
            continue

        for i in np.flatnonzero(irregular & (rr > rr.mean())):
            lo = peaks[i] + lockout
            hi = peaks[i + 1] - lockout
            if hi <= lo:
                continue
            found, _ = signal.find_peaks(x[lo:hi], height=low_height, distance=lockout)
            if found.size:
                peaks.extend(int(lo + j) for j in found)
                changed = True
        if not changed:
            break
        peaks = sorted(set(peaks))

    if len(peaks) != len(r) or np.any(np.asarray(peaks) != np.asarray(sorted(r))):
        logger.debug(f"RR repair changed {len(r)} peaks into {len(peaks)}")
    remaining = int(flag_irregular_intervals(peaks).sum())
    if remaining:
        logger.debug(f"{remaining} RR intervals still irregular after repair")
    return np.asarray(peaks, dtype=int)


def refine_r_peak(r_idx, x, rate_hz, radius_ms=R_REFINE_MS):
    radius = _ms_to_samples(radius_ms, rate_hz)
    lo = max(0, r_idx - radius)
    hi = min(len(x), r_idx + radius + 1)
    return int(lo + np.argmax(x[lo:hi]))


def locate_qst(r_idx, x, rate_hz, next_r_idx=None):
    """
    Q is the minimum in (r - 100 ms, r), S the minimum in (r, r + 100 ms) and T the
    maximum between S and r + 500 ms (or 100 ms before the next R, whichever is first).
    """
    n_qs = _ms_to_samples(QS_SEARCH_MS, rate_hz)
    n_t = _ms_to_samples(T_SEARCH_MS, rate_hz)
    if r_idx - n_qs < 0 or r_idx + n_t >= len(x):
        raise SegmentOutOfBounds(f"Beat at sample {r_idx} is too close to the window edge")

    q_idx = r_idx - n_qs + 1 + int(np.argmin(x[r_idx - n_qs + 1:r_idx]))
    s_idx = r_idx + 1 + int(np.argmin(x[r_idx + 1:r_idx + n_qs]))
    t_end = r_idx + n_t
    if next_r_idx is not None:
        t_end = min(t_end, next_r_idx - n_qs)
    if t_end <= s_idx + 1:
        raise SegmentOutOfBounds(f"No room for a T wave after beat at sample {r_idx}")
    t_idx = s_idx + 1 + int(np.argmax(x[s_idx + 1:t_end]))
    return BeatFiducials(r_idx=r_idx, q_idx=q_idx, s_idx=s_idx, t_idx=t_idx)


def _half_prominence_width(x, idx, wlen):
    wlen = max(3, int(wlen) | 1)
    prominence = signal.peak_prominences(x, [idx], wlen=wlen)
    width = signal.peak_widths(x, [idx], rel_height=0.5, prominence_data=prominence)
    return float(prominence[0][0]), float(width[0][0])


def beat_morphology(fiducials, x, rate_hz, rr_ms):
    x = np.asarray(x, dtype=float)
    to_ms = 1000.0 / rate_hz
    f = fiducials

    r_prom, r_width = _half_prominence_width(x, f.r_idx, 2 * _ms_to_samples(QS_SEARCH_MS, rate_hz) + 1)
    t_span = max(f.t_idx - f.s_idx, 1)
    _, t_width = _half_prominence_width(x, f.t_idx, 2 * t_span + 1)

    r_width_ms = r_width * to_ms
    t_width_ms = t_width * to_ms
    r_mag = float(x[f.r_idx])
    t_mag = float(x[f.t_idx])
    return BeatMorphology(
        r_mag=r_mag,
        r_prom=r_prom,
        r_width_ms=r_width_ms,
        t_mag=t_mag,
        t_width_ms=t_width_ms,
        qs_dist_ms=(f.s_idx - f.q_idx) * to_ms,
        st_dist_ms=(f.t_idx - f.s_idx) * to_ms,
        bpm=60000.0 / rr_ms,
        r_power=0.5 * (r_width_ms / 1000.0) * r_prom,
        t_power=0.5 * (t_width_ms / 1000.0) * max(t_mag, 0.0),
    )


def window_beats(win, preprocess=True, median_k=3, band=(5.0, 25.0), lead='lead1_mv'):
    """Per-beat morphology for one ECG window; beats touching the edges are skipped."""
    raw = win.channel(lead) if lead in win.channel_names else win.channel(0)
    rate = win.rate_hz
    if preprocess:
        detection, morph = preprocess_ecg(raw, rate, median_k=median_k, band=band)
    else:
        detection = morph = np.asarray(raw, dtype=float)

    peaks = detect_r_peaks(detection, rate)
    peaks = correct_missed_peaks(peaks, detection, rate)
    if peaks.size < MIN_BEATS:
        raise NoBeatsFound(f"Only {peaks.size} R peaks left after RR repair")

    peaks = np.array([refine_r_peak(int(p), morph, rate) for p in peaks])
    beats = []
    for i, r_idx in enumerate(peaks):
        neighbour = peaks[i - 1] if i > 0 else peaks[i + 1]
        rr_ms = abs(int(r_idx) - int(neighbour)) * 1000.0 / rate
        next_r = int(peaks[i + 1]) if i + 1 < peaks.size else None
        try:
            fiducials = locate_qst(int(r_idx), morph, rate, next_r_idx=next_r)
        except SegmentOutOfBounds:
            continue
        beats.append(beat_morphology(fiducials, morph, rate, rr_ms))
    return beats


def window_ecg_features(win, preprocess=True, median_k=3, band=(5.0, 25.0)):
    """
    Mean and std of every morphology field over the beats of ``win``.

    Raises:
        NoBeatsFound: fewer than three beats with a complete Q-R-S-T segment.
    """
    beats = window_beats(win, preprocess=preprocess, median_k=median_k, band=band)
    if len(beats) < MIN_BEATS:
        raise NoBeatsFound(f"Only {len(beats)} complete beats in window at {win.t_start_ms} ms")
    table = np.array([astuple(b) for b in beats], dtype=float)
    values = np.column_stack([table.mean(axis=0), table.std(axis=0)]).ravel()
    return EcgFeatureVector(values=values, n_beats=len(beats))
