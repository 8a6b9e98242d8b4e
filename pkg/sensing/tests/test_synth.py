"""
Tests for the synthetic session generator.
"""

import json
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from sensing.data_io import load_manifest, load_session, window_response
from sensing.exceptions import BadConfig
from sensing.features import extract_session_instances, read_instances, write_feature_tables
from sensing.synth import SynthConfig, gen_session, gen_sessions, write_session

from .fixtures import clean_config


class SynthSessionTest(SimpleTestCase):
    """
    Test cases for synthetic session generation.
    """

    def test_same_seed_is_bit_identical(self):
        """Test that a fixed seed reproduces every stream exactly."""
        cfg = SynthConfig(seed=5, protocol=(('rest', 30.0), ('run', 30.0)), ecg_noise_mv=0.02)
        a, b = gen_session(cfg), gen_session(cfg)

        np.testing.assert_array_equal(a.ecg.data, b.ecg.data)
        np.testing.assert_array_equal(a.imu.data, b.imu.data)
        np.testing.assert_array_equal(a.resp.br_bpm, b.resp.br_bpm)
        self.assertEqual(a.truth, b.truth)

    def test_different_subjects_differ(self):
        """Test that subjects draw from separate substreams."""
        cfg = SynthConfig(seed=5, protocol=(('walk', 30.0),))
        first, second = gen_sessions(cfg, n_subjects=2)

        self.assertEqual((first.subject_id, second.subject_id), ('S01', 'S02'))
        self.assertFalse(np.array_equal(first.imu.data, second.imu.data))

    def test_sixty_bpm_beat_count(self):
        """Test that 60 s at 60 bpm plants 60 beats give or take one."""
        session = gen_session(clean_config(hr_bpm=60.0, duration_s=60.0))
        self.assertLessEqual(abs(len(session.truth['beats']) - 60), 1)

    def test_unknown_modulated_parameter(self):
        """Test that an invalid modulation map raises BadConfig."""
        with self.assertRaises(BadConfig):
            gen_session(clean_config(modulation={'rest': {'br': 'p_wave'}}))

    def test_unknown_activity(self):
        """Test that a protocol activity without a profile raises BadConfig."""
        with self.assertRaises(BadConfig):
            gen_session(SynthConfig(protocol=(('swim', 30.0),)))

    def test_constant_response_reproduces_itself(self):
        """Test that flat planted BR/VE come back exactly through response windowing."""
        session = gen_session(clean_config(duration_s=60.0))
        windows = window_response(session.resp, t0_ms=0, duration_s=60.0)

        self.assertEqual(len(windows), 16)
        self.assertTrue(all(w.br_mean == 12.0 and w.ve_mean == 8.0 for w in windows))

    def test_label_delay(self):
        """Test that spirometer samples start label_delay_s into each activity."""
        cfg = replace(SynthConfig(seed=1, protocol=(('rest', 60.0), ('walk', 60.0))), label_delay_s=20.0)
        session = gen_session(cfg)

        self.assertEqual(session.resp.t_ms[0], 20000.0)
        self.assertNotIn(65000.0, session.resp.t_ms.tolist())
        self.assertIn(80000.0, session.resp.t_ms.tolist())


class SynthRoundTripTest(SimpleTestCase):
    """
    Test cases for writing sessions and extracting features from them.
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        cls.dir = Path(cls.tmp.name)
        cls.session = gen_session(SynthConfig(seed=3, protocol=(('rest', 45.0), ('run', 45.0))))
        cls.manifest_path = write_session(cls.session, cls.dir / 'S01')

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def test_loader_reads_written_session(self):
        """Test that written CSVs load back with the same shape and labels."""
        ecg, imu, resp, intervals = load_session(load_manifest(self.manifest_path))

        self.assertEqual(ecg.n_samples, self.session.ecg.n_samples)
        self.assertEqual(imu.n_samples, self.session.imu.n_samples)
        self.assertAlmostEqual(ecg.rate_hz, 250.0)
        self.assertEqual(intervals, self.session.intervals)
        self.assertEqual(len(resp), len(self.session.resp))
        truth = json.loads((self.dir / 'S01' / 'truth.json').read_text())
        self.assertEqual(len(truth['beats']), len(self.session.truth['beats']))

    def test_instances_align_and_label(self):
        """Test that instances carry both feature vectors, labels and responses."""
        instances = extract_session_instances(
            self.session.ecg, self.session.imu, self.session.resp, self.session.intervals, 'S01',
        )

        self.assertGreater(len(instances), 20)
        centers = [i.t_center_ms for i in instances]
        self.assertEqual(centers, sorted(centers))
        self.assertTrue(all(i.ecg.shape == (20,) and i.imu.shape == (90,) for i in instances))
        self.assertEqual({i.context for i in instances}, {'rest', 'run', None})
        labelled = [i for i in instances if i.context == 'rest']
        self.assertTrue(all(np.isfinite(i.br_bpm) for i in labelled))

    def test_feature_tables_round_trip(self):
        """Test that instances written to CSV read back with the same values and fingerprint."""
        instances = extract_session_instances(
            self.session.ecg, self.session.imu, self.session.resp, self.session.intervals, 'S01',
        )
        out = self.dir / 'features'
        out.mkdir(exist_ok=True)
        fingerprints = write_feature_tables(instances, out)
        again = write_feature_tables(read_instances(out / 'instances.csv'), out)

        self.assertEqual(fingerprints, again)
        reloaded = read_instances(out / 'instances.csv')
        np.testing.assert_array_equal(reloaded[0].ecg, instances[0].ecg)
        self.assertEqual(reloaded[-1].context, instances[-1].context)
