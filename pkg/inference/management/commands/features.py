"""
Management command that windows every session and writes the feature tables.
"""

from pathlib import Path
import json

from sensing.data_io import load_session, load_study
from sensing.ecg_features import ECG_FEATURE_NAMES
from sensing.exceptions import SchemaMismatch
from sensing.features import extract_session_instances, imu_names_for, write_feature_tables
from sensing.imu_features import IMU_FEATURE_NAMES, RAW_FEATURE_NAMES

from ..base import FEATURES_DIR, STUDY_MANIFEST, PipelineCommand, write_json


class Command(PipelineCommand):
    help = 'Extract windowed ECG and IMU features from the sessions in a manifest'
    command_name = 'features'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--manifest',
            type=str,
            default=None,
            help='Session or study manifest (default: <out>/manifest.json)'
        )
        parser.add_argument(
            '--verify',
            action='store_true',
            help='Fail unless the regenerated tables match the stored fingerprints'
        )

    def run(self, config, out, options):
        manifest_path = Path(options['manifest']) if options.get('manifest') else out / STUDY_MANIFEST
        instances = []
        for manifest in load_study(manifest_path):
            ecg, imu, resp, intervals = load_session(manifest, config.contexts)
            instances.extend(extract_session_instances(
                ecg, imu, resp, intervals,
                subject_id=manifest.subject_id,
                win_s=config.win_s,
                step_s=config.step_s,
                ecg_options=config.ecg_options(),
                imu_options=config.imu_options(),
            ))

        directory = out / FEATURES_DIR
        stored_path = directory / 'features.json'
        stored = json.loads(stored_path.read_text(encoding='utf-8')) if stored_path.is_file() else None
        directory.mkdir(parents=True, exist_ok=True)
        fingerprints = write_feature_tables(instances, directory)

        if options.get('verify'):
            if stored is None:
                raise SchemaMismatch(f"No stored fingerprints at {stored_path}")
            changed = sorted(k for k, v in fingerprints.items() if stored['fingerprints'].get(k) != v)
            if changed:
                raise SchemaMismatch(f"Regenerated tables differ from stored fingerprints: {', '.join(changed)}")

        imu_width = len(RAW_FEATURE_NAMES) if config.imu_keep_entropy else len(IMU_FEATURE_NAMES)
        write_json(stored_path, {
            'fingerprints': fingerprints,
            'n_instances': len(instances),
            'n_labelled': sum(1 for i in instances if i.labelled),
            'layout': {
                'win_s': config.win_s,
                'step_s': config.step_s,
                'ecg': list(ECG_FEATURE_NAMES),
                'imu': list(imu_names_for(imu_width)),
            },
        })
        return f"Wrote {len(instances)} instances to {directory}"
