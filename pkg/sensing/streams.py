"""
In-memory containers for sensor and spirometer data.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .exceptions import EmptySeries, EmptyStream, NonMonotonicTimestamps, SchemaMismatch, WrongChannelCount


@dataclass(frozen=True)
class SensorStream:
    """
    Uniformly sampled multichannel signal.

    ``data`` has shape (n_samples, n_channels); column ``k`` is the channel named
    ``channel_names[k]``. Units follow the channel suffix (mv, g, dps).
    """

    channel_names: Tuple[str, ...]
    data: np.ndarray
    rate_hz: float
    t0_ms: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        object.__setattr__(self, 'data', data)
        object.__setattr__(self, 'channel_names', tuple(self.channel_names))
        if self.rate_hz <= 0:
            raise SchemaMismatch(f"rate_hz must be positive, got {self.rate_hz}")
        if data.shape[1] != len(self.channel_names):
            raise WrongChannelCount(
                f"{data.shape[1]} data columns for {len(self.channel_names)} channel names"
            )
        if data.shape[0] == 0:
            raise EmptyStream("Stream has no samples")
        if not np.all(np.isfinite(data)):
            raise EmptyStream("Stream contains non-finite samples")

    @property
    def n_samples(self):
        return self.data.shape[0]

    @property
    def n_channels(self):
        return self.data.shape[1]

    @property
    def duration_s(self):
        return self.n_samples / self.rate_hz

    @property
    def t_ms(self):
        return self.t0_ms + np.arange(self.n_samples) * 1000.0 / self.rate_hz

    def channel(self, name):
        return self.data[:, self.channel_names.index(name)]

    def slice_samples(self, start, stop):
        """Sub-stream of samples [start, stop) with its own start timestamp."""
        t0 = self.t0_ms + int(round(start * 1000.0 / self.rate_hz))
        return SensorStream(self.channel_names, self.data[start:stop], self.rate_hz, t0)


@dataclass(frozen=True)
class ResponseSeries:
    """Irregular spirometer samples: breathing rate (breaths/min) and ventilation (L/min)."""

    t_ms: np.ndarray
    br_bpm: np.ndarray
    ve_lpm: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_ms, dtype=float)
        br = np.asarray(self.br_bpm, dtype=float)
        ve = np.asarray(self.ve_lpm, dtype=float)
        if t.size == 0:
            raise EmptySeries("Response series has no samples")
        if not (t.shape == br.shape == ve.shape):
            raise SchemaMismatch("Response columns differ in length")
        if np.any(np.diff(t) <= 0):
            raise NonMonotonicTimestamps("Response timestamps must be strictly increasing")
        if np.any(br < 0) or np.any(ve < 0):
            raise SchemaMismatch("Breathing rate and ventilation must be non-negative")
        object.__setattr__(self, 't_ms', t)
        object.__setattr__(self, 'br_bpm', br)
        object.__setattr__(self, 've_lpm', ve)

    def __len__(self):
        return self.t_ms.size


@dataclass(frozen=True)
class Window:
    """One analysis window cut from a SensorStream."""

    samples: np.ndarray
    t_start_ms: int
    t_center_ms: int
    rate_hz: float
    channel_names: Tuple[str, ...] = field(default=())

    @property
    def n_samples(self):
        return self.samples.shape[0]

    def channel(self, name_or_index):
        if isinstance(name_or_index, str):
            return self.samples[:, self.channel_names.index(name_or_index)]
        return self.samples[:, name_or_index]


@dataclass(frozen=True)
class ActivityInterval:
    start_ms: int
    end_ms: int
    activity: str

    def contains(self, t_start_ms, t_end_ms):
        return self.start_ms <= t_start_ms and t_end_ms <= self.end_ms


@dataclass(frozen=True)
class SessionManifest:
    subject_id: str
    ecg_path: str
    imu_path: str
    resp_path: str
    labels_path: str
    activity_intervals: Tuple[ActivityInterval, ...] = ()
    source: Optional[str] = None
