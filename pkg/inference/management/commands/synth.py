"""
Management command that generates synthetic sessions with planted ground truth.
"""

from sensing.data_io import write_study
from sensing.synth import SynthConfig, gen_sessions, write_session

from ..base import SESSIONS_DIR, STUDY_MANIFEST, PipelineCommand


class Command(PipelineCommand):
    help = 'Generate synthetic ECG/IMU/spirometer sessions and a study manifest'
    command_name = 'synth'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--subjects',
            type=int,
            default=1,
            help='Number of subjects (one session each)'
        )
        parser.add_argument(
            '--segment-s',
            type=float,
            default=120.0,
            help='Seconds spent in each activity'
        )
        parser.add_argument(
            '--label-delay-s',
            type=float,
            default=0.0,
            help='Seconds into each activity before spirometer samples start'
        )
        parser.add_argument(
            '--ecg-noise',
            type=float,
            default=0.0,
            help='White ECG noise (mV)'
        )
        parser.add_argument(
            '--wander',
            type=float,
            default=0.0,
            help='Baseline wander amplitude (mV)'
        )
        parser.add_argument(
            '--resp-noise',
            type=float,
            default=0.0,
            help='Relative spirometer measurement noise'
        )

    def run(self, config, out, options):
        cfg = SynthConfig(
            seed=config.seed,
            protocol=tuple((context, options['segment_s']) for context in config.contexts),
            label_delay_s=options['label_delay_s'],
            ecg_noise_mv=options['ecg_noise'],
            wander_mv=options['wander'],
            resp_noise=options['resp_noise'],
        ).validate()

        manifests = []
        for session in gen_sessions(cfg, n_subjects=options['subjects']):
            manifests.append(write_session(session, out / SESSIONS_DIR / session.subject_id))
            self.stdout.write(f"Wrote session {session.subject_id} ({len(session.truth['beats'])} beats)")
        study = write_study(manifests, out / STUDY_MANIFEST)
        return f"Generated {len(manifests)} session(s); study manifest {study}"
