"""
Tests for windowing and filtering primitives.
"""

import numpy as np
import pytest
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sensing import dsp
from sensing.data_io import window_response
from sensing.exceptions import BadBand, BadConfig, BadKernel, StreamTooShort
from sensing.streams import ResponseSeries

from .fixtures import constant_stream


class SlidingWindowTest(SimpleTestCase):
    """
    Test cases for sliding window cutting.
    """

    def test_sixty_seconds_gives_sixteen_windows(self):
        """Test that a 60 s stream yields 16 windows of 15 s every 3 s."""
        windows = dsp.sliding_windows(constant_stream(15000), 15.0, 3.0)

        self.assertEqual(len(windows), 16)
        self.assertTrue(all(w.n_samples == 3750 for w in windows))
        self.assertEqual([w.t_center_ms for w in windows[:3]], [7500, 10500, 13500])

    def test_short_stream_rejected(self):
        """Test that a stream shorter than the window raises StreamTooShort."""
        with self.assertRaises(StreamTooShort):
            dsp.sliding_windows(constant_stream(1000), 15.0, 3.0)

    def test_centers_match_response_windows(self):
        """Test that sensor and response windows share center timestamps."""
        stream = constant_stream(250 * 45, t0_ms=2000)
        resp = ResponseSeries(np.arange(2000, 47000, 1000), np.full(45, 12.0), np.full(45, 8.0))

        sensor_centers = [w.t_center_ms for w in dsp.sliding_windows(stream, 15.0, 3.0)]
        response_centers = [w.t_center_ms for w in window_response(resp, 15.0, 3.0, t0_ms=2000,
                                                                  duration_s=stream.duration_s)]

        self.assertEqual(sensor_centers, response_centers)


class FilterTest(SimpleTestCase):
    """
    Test cases for clipping, median, detrend and band-pass filters.
    """

    def test_median_removes_isolated_spike(self):
        """Test that a single-sample spike disappears under a 5-sample median."""
        x = np.zeros(100)
        x[50] = 10.0
        np.testing.assert_array_equal(dsp.median_filter(x, 5), np.zeros(100))

    def test_median_rejects_even_kernel(self):
        """Test that even or oversized kernels raise BadKernel."""
        with self.assertRaises(BadKernel):
            dsp.median_filter(np.zeros(10), 4)
        with self.assertRaises(BadKernel):
            dsp.median_filter(np.zeros(3), 5)

    def test_level_clip(self):
        """Test clipping to the sensor range."""
        np.testing.assert_array_equal(dsp.level_clip([-9.0, 0.5, 9.0], -4.0, 4.0), [-4.0, 0.5, 4.0])
        with self.assertRaises(BadConfig):
            dsp.level_clip([1.0], 4.0, -4.0)

    def test_detrend_removes_ramp(self):
        """Test that a pure ramp detrends to zero."""
        np.testing.assert_allclose(dsp.detrend_linear(np.linspace(3.0, 7.0, 50)), 0.0, atol=1e-12)

    def test_too_short_for_detrend_or_teager(self):
        """Test that one-sample detrend and two-sample Teager energy raise StreamTooShort."""
        with self.assertRaises(StreamTooShort):
            dsp.detrend_linear([1.0])
        with self.assertRaises(StreamTooShort):
            dsp.teager_energy([1.0, 2.0])

    def test_passband_tone_keeps_amplitude(self):
        """Test that a 10 Hz tone passes the 5-25 Hz band."""
        t = np.arange(2500) / 250.0
        tone = np.sin(2 * np.pi * 10.0 * t)
        out = dsp.bandpass(tone, 5.0, 25.0, 250.0)
        ratio = np.std(out[250:-250]) / np.std(tone[250:-250])
        self.assertTrue(0.9 <= ratio <= 1.1)

    def test_baseline_drift_attenuated(self):
        """Test that 0.5 Hz drift loses at least 20 dB in the 5-25 Hz band."""
        t = np.arange(2500) / 250.0
        drift = np.sin(2 * np.pi * 0.5 * t)
        out = dsp.bandpass(drift, 5.0, 25.0, 250.0)
        ratio = np.std(out[250:-250]) / np.std(drift[250:-250])
        self.assertLess(20 * np.log10(ratio), -20.0)

    def test_band_above_nyquist_rejected(self):
        """Test that an upper edge at or above Nyquist raises BadBand."""
        with self.assertRaises(BadBand):
            dsp.bandpass(np.zeros(100), 5.0, 125.0, 250.0)
        with self.assertRaises(BadBand):
            dsp.bandpass(np.zeros(100), 30.0, 20.0, 250.0)


class EnergyTest(SimpleTestCase):
    """
    Test cases for Teager energy, band power and mean-crossing rate.
    """

    def test_teager_of_sinusoid_is_constant(self):
        """Test that A sin(wn) has Teager energy A^2 sin^2(w)."""
        n = np.arange(200)
        energy = dsp.teager_energy(2.0 * np.sin(0.1 * n))
        np.testing.assert_allclose(energy, 4.0 * np.sin(0.1) ** 2, rtol=1e-9)

    def test_band_power_full_band_matches_mean_square(self):
        """Test that power over [0, Nyquist] equals the mean square of the signal."""
        x = np.random.default_rng(3).standard_normal(1000)
        self.assertAlmostEqual(dsp.band_power(x, 0.0, 25.0, 50.0), float(np.mean(x ** 2)), places=9)

    def test_mean_crossing_rate_of_square_wave(self):
        """Test that a 2 Hz square wave crosses its mean about 4 times per second."""
        t = np.arange(2500) / 250.0
        square = np.where((t * 4.0) % 2.0 < 1.0, 1.0, -1.0)
        self.assertAlmostEqual(dsp.mean_crossing_rate(square, 250.0), 4.0, delta=0.2)

    def test_constant_signal_has_no_crossings(self):
        """Test that a flat signal never crosses its mean."""
        self.assertEqual(dsp.mean_crossing_rate(np.full(50, 3.0), 50.0), 0.0)


class TestFilterProperties:
    """Property tests for length preservation and shift invariance."""

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, st.integers(64, 400), elements=st.floats(-5, 5)))
    def test_filters_preserve_length(self, x):
        assert dsp.median_filter(x, 5).shape == x.shape
        assert dsp.bandpass(x, 5.0, 25.0, 250.0).shape == x.shape
        assert dsp.teager_energy(x).shape == x.shape

    @settings(max_examples=30, deadline=None)
    @given(
        arrays(np.float64, st.integers(20, 200), elements=st.floats(-5, 5)),
        st.floats(-100, 100),
    )
    def test_median_commutes_with_offset(self, x, offset):
        np.testing.assert_allclose(
            dsp.median_filter(x + offset, 5), dsp.median_filter(x, 5) + offset, atol=1e-9,
        )

    @pytest.mark.parametrize('k', [0, 2, -3])
    def test_bad_kernels(self, k):
        with pytest.raises(BadKernel):
            dsp.median_filter(np.zeros(10), k)
