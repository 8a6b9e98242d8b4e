"""
Management command that trains the context classifier and the regression banks.
"""

from sensing.ecg_features import ECG_FEATURE_NAMES

from ..base import BUNDLE_FILE, MODELS_DIR, PipelineCommand
from ...bundle import ModelBundle, save_bundle
from ...pipeline import train_classifier, train_pipeline


class Command(PipelineCommand):
    help = 'Train the context classifier and per-context regression banks on every labelled instance'
    command_name = 'train'

    def add_command_arguments(self, parser):
        self.add_target_argument(parser)
        self.add_model_argument(parser)
        parser.add_argument(
            '--tau',
            type=float,
            default=None,
            help='Posterior threshold for selecting a single bank'
        )

    def run(self, config, out, options):
        instances = self.read_instances(out)
        classifier = train_classifier(instances, config)
        groups = {}
        for target in self.targets(options):
            for kind in self.model_kinds(options):
                groups[(target, kind)] = train_pipeline(instances, kind, target, config)
                self.stdout.write(f"Trained {target}/{kind} banks")

        bundle = ModelBundle(
            classifier=classifier,
            groups=groups,
            config_hash=config.config_hash(),
            layout={'imu_width': int(instances[0].imu.size), 'ecg_width': len(ECG_FEATURE_NAMES)},
        )
        path = save_bundle(bundle, out / MODELS_DIR / BUNDLE_FILE)
        return f"Saved {len(groups)} bank group(s) and a {classifier.n_trees}-tree classifier to {path}"
