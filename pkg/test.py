"""
End-to-end test suite: synthetic study through features, training, evaluation,
ranking, reporting and the inference API.
"""

import json
import math
import tempfile
from io import StringIO
from pathlib import Path

import pandas as pd
import pytest
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase, override_settings
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APITestCase

from run_tracking.models import CommandRun
from sensing.ecg_features import ECG_FEATURE_NAMES
from sensing.imu_features import IMU_FEATURE_NAMES

FAST = {
    **settings.CARDIORESP,
    'RF_TREES': 10,
    'GPR_RESTARTS': 1,
    'GPR_MAX_ITER': 30,
    'BOOST_MAX_ITER': 20,
}


def run_command(name, out, **options):
    stdout, stderr = StringIO(), StringIO()
    call_command(name, out=str(out), stdout=stdout, stderr=stderr, **options)
    return stdout.getvalue()


def build_study(out):
    """Synthesize one subject and run every stage into ``out``."""
    run_command('synth', out, seed=11, subjects=1, segment_s=90.0)
    run_command('features', out, seed=11)
    run_command('train', out, seed=11, model='all')
    run_command('eval', out, seed=11, model='glm', ratio=0.8)
    run_command('rank', out, seed=11)
    run_command('report', out, seed=11)


@override_settings(CARDIORESP=FAST)
class PipelineCommandsTest(TestCase):
    """
    Test cases for the full command chain on a synthetic study.
    """

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        cls.out = Path(cls.tmp.name)
        super().setUpClass()

    @classmethod
    def setUpTestData(cls):
        build_study(cls.out)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def test_every_stage_writes_its_outputs(self):
        """Test that the work directory holds each stage's files."""
        expected = [
            'manifest.json',
            'features/instances.csv',
            'features/ecg_features.csv',
            'features/imu_features.csv',
            'features/features.json',
            'models/models.json',
            'metrics.json',
            'predictions.csv',
            'confusion.csv',
            'relevance.csv',
            'report.txt',
        ]
        for name in expected:
            self.assertTrue((self.out / name).is_file(), msg=name)
        for command in ('synth', 'features', 'train', 'eval', 'rank', 'report'):
            provenance = json.loads((self.out / 'provenance' / f'{command}.json').read_text())
            self.assertEqual(provenance['seed'], 11)
            self.assertEqual(provenance['command'], command)

    def test_study_manifest_lists_sessions(self):
        """Test the study manifest written by synth."""
        study = json.loads((self.out / 'manifest.json').read_text())
        self.assertEqual(len(study['sessions']), 1)
        self.assertTrue((self.out / 'sessions' / 'S01').is_dir())

    def test_feature_tables_follow_layout(self):
        """Test the instance table columns and the feature summary."""
        frame = pd.read_csv(self.out / 'features' / 'instances.csv')
        summary = json.loads((self.out / 'features' / 'features.json').read_text())

        self.assertEqual(list(frame.columns[5:25]), list(ECG_FEATURE_NAMES))
        self.assertEqual(list(frame.columns[25:]), list(IMU_FEATURE_NAMES))
        self.assertEqual(summary['n_instances'], len(frame))
        self.assertGreater(summary['n_labelled'], 100)

    def test_feature_verification_passes_on_rerun(self):
        """Test that regenerating the tables reproduces the stored fingerprints."""
        run_command('features', self.out, seed=11, verify=True)

    def test_classifier_recognizes_contexts(self):
        """Test that held-out context accuracy is high on the synthetic protocol."""
        metrics = json.loads((self.out / 'metrics.json').read_text())
        entry = metrics['ratios']['80/20']

        self.assertEqual(metrics['split_mode'], 'instance')
        self.assertGreater(entry['classifier']['accuracy'], 0.8)
        for target in ('br', 've'):
            glm = entry['targets'][target]['glm']
            self.assertTrue(math.isfinite(glm['mae']))
            self.assertIn('mae_agnostic', glm)

    def test_predictions_table(self):
        """Test that every held-out record carries a posterior over all contexts."""
        frame = pd.read_csv(self.out / 'predictions.csv')
        posterior_columns = [f'p_{c}' for c in FAST['CONTEXTS']]

        self.assertEqual(set(frame['target']), {'br', 've'})
        self.assertTrue(((frame[posterior_columns].sum(axis=1) - 1.0).abs() < 1e-9).all())

    def test_relevance_table(self):
        """Test one relevance row per target and context, each summing to one hundred."""
        frame = pd.read_csv(self.out / 'relevance.csv')
        self.assertEqual(len(frame), 2 * len(FAST['CONTEXTS']))
        sums = frame[['Rh', 'Rw', 'Th', 'Tw', 'RR']].sum(axis=1)
        self.assertTrue(((sums - 100.0).abs() < 1e-6).all())

    def test_report_sections(self):
        """Test that the report has the classification, MAE and relevance tables."""
        text = (self.out / 'report.txt').read_text()
        for title in ('Context classification', 'Confusion matrix (80/20, rows true)',
                      'Inference MAE, contextual vs context-agnostic', 'Biomarker relevance (%)'):
            self.assertIn(title, text)

    def test_eval_and_rank_are_deterministic(self):
        """Test that rerunning eval and rank with the same seed rewrites identical bytes."""
        before = {name: (self.out / name).read_bytes() for name in ('metrics.json', 'predictions.csv', 'relevance.csv')}
        run_command('eval', self.out, seed=11, model='glm', ratio=0.8)
        run_command('rank', self.out, seed=11)
        for name, data in before.items():
            self.assertEqual((self.out / name).read_bytes(), data, msg=name)

    def test_runs_are_recorded(self):
        """Test that each command run lands in the ledger as succeeded."""
        commands = set(CommandRun.objects.filter(status=CommandRun.STATUS_SUCCEEDED).values_list('command', flat=True))
        self.assertTrue({'synth', 'features', 'train', 'eval', 'rank', 'report'} <= commands)


@override_settings(CARDIORESP=FAST)
class TrainedBundleAPITest(APITestCase):
    """
    Test cases for the inference endpoint serving a bundle built by the commands.
    """

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        cls.out = Path(cls.tmp.name)
        super().setUpClass()

    @classmethod
    def setUpTestData(cls):
        run_command('synth', cls.out, seed=5, segment_s=60.0)
        run_command('features', cls.out, seed=5)
        run_command('train', cls.out, seed=5, model='glm', target='ve')
        cls.frame = pd.read_csv(cls.out / 'features' / 'instances.csv', keep_default_na=False)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def test_infer_from_feature_row(self):
        """Test that a feature row of the study gets a finite VE estimate."""
        row = self.frame[self.frame['context'] == 'run'].iloc[0]
        payload = {
            'target': 've',
            'model_kind': 'glm',
            'ecg_features': [float(row[c]) for c in ECG_FEATURE_NAMES],
            'imu_features': [float(row[c]) for c in IMU_FEATURE_NAMES],
        }
        bundle_path = str(self.out / 'models' / 'models.json')
        with override_settings(CARDIORESP={**FAST, 'MODEL_BUNDLE_PATH': bundle_path}):
            response = self.client.post(reverse('inference:infer'), payload, format='json')

        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertTrue(math.isfinite(response.data['data']['prediction']))
        self.assertEqual(set(response.data['data']['posterior']), set(FAST['CONTEXTS']))

    def test_br_not_trained(self):
        """Test that asking for a target the bundle lacks answers 503."""
        row = self.frame.iloc[0]
        payload = {
            'target': 'br',
            'model_kind': 'glm',
            'ecg_features': [float(row[c]) for c in ECG_FEATURE_NAMES],
            'imu_features': [float(row[c]) for c in IMU_FEATURE_NAMES],
        }
        bundle_path = str(self.out / 'models' / 'models.json')
        with override_settings(CARDIORESP={**FAST, 'MODEL_BUNDLE_PATH': bundle_path}):
            response = self.client.post(reverse('inference:infer'), payload, format='json')
        self.assertEqual(response.status_code, status.HTTP_503_SERVICE_UNAVAILABLE)


@pytest.mark.django_db
class TestCommandErrors:
    """
    Test cases for the JSON error envelope and exit code of failing commands.
    """

    def run_failing(self, name, out, **options):
        stderr = StringIO()
        with pytest.raises(CommandError) as caught:
            call_command(name, out=str(out), stdout=StringIO(), stderr=stderr, **options)
        return caught.value, json.loads(stderr.getvalue())

    def test_ratio_out_of_range(self, tmp_path):
        """Test that a train ratio above 0.8 fails with BadConfig and exit code 2."""
        error, envelope = self.run_failing('eval', tmp_path, ratio=0.9)

        assert error.returncode == 2
        assert envelope['success'] is False
        assert envelope['error']['type'] == 'BadConfig'
        assert CommandRun.objects.count() == 0

    def test_train_without_features(self, tmp_path):
        """Test that training in an empty directory reports the missing feature table."""
        error, envelope = self.run_failing('train', tmp_path, model='glm')

        assert error.returncode == 2
        assert envelope['error']['type'] == 'MissingFile'
        run = CommandRun.objects.get(command='train')
        assert run.status == CommandRun.STATUS_FAILED
        assert run.error_type == 'MissingFile'

    def test_report_without_metrics(self, tmp_path):
        """Test that the report command needs an evaluation first."""
        _, envelope = self.run_failing('report', tmp_path)
        assert envelope['error']['code'] == 'missing_file'

    def test_verify_without_stored_fingerprints(self, tmp_path):
        """Test that --verify on a fresh directory is a schema mismatch."""
        run_command('synth', tmp_path, seed=2, segment_s=30.0)
        _, envelope = self.run_failing('features', tmp_path, verify=True)
        assert envelope['error']['type'] == 'SchemaMismatch'

    def test_corrupt_response_file(self, tmp_path):
        """Test that a non-numeric spirometer value is reported in the envelope, not as a traceback."""
        run_command('synth', tmp_path, seed=3, segment_s=30.0)
        resp_path = tmp_path / 'sessions' / 'S01' / 'resp.csv'
        frame = pd.read_csv(resp_path).astype({'br_bpm': object})
        frame.loc[0, 'br_bpm'] = 'n/a?'
        frame.to_csv(resp_path, index=False)

        error, envelope = self.run_failing('features', tmp_path)

        assert error.returncode == 2
        assert envelope['error'] == {
            'code': 'schema_mismatch',
            'message': envelope['error']['message'],
            'type': 'SchemaMismatch',
        }
        assert 'br_bpm' in envelope['error']['message']
