"""
Shared plumbing for the pipeline management commands.

Every command works inside one directory (``--out``), records itself in the run
ledger, writes a provenance file next to its outputs and turns pipeline errors
into a JSON error envelope on stderr with exit code 2.
"""

from importlib import metadata
from pathlib import Path
import json
import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from django.utils import timezone

from run_tracking.tracking import track_run
from sensing.exceptions import MissingFile, PipelineError
from sensing.features import read_instances

from ..conf import MODEL_KINDS, TARGETS, get_config
from ..exceptions import error_envelope

logger = logging.getLogger(__name__)

PROVENANCE_PACKAGES = ('numpy', 'scipy', 'pandas', 'scikit-learn', 'Django', 'djangorestframework')

SESSIONS_DIR = 'sessions'
FEATURES_DIR = 'features'
MODELS_DIR = 'models'
PROVENANCE_DIR = 'provenance'
STUDY_MANIFEST = 'manifest.json'
BUNDLE_FILE = 'models.json'


def package_versions():
    versions = {}
    for name in PROVENANCE_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


def write_json(path, data):
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    return path


def _jsonable(options):
    clean = {}
    for key, value in options.items():
        if key in ('stdout', 'stderr', 'skip_checks', 'verbosity', 'settings', 'pythonpath',
                   'traceback', 'no_color', 'force_color'):
            continue
        clean[key] = str(value) if isinstance(value, Path) else value
    return clean


class PipelineCommand(BaseCommand):
    """
    Base for ``synth``, ``features``, ``train``, ``eval``, ``rank`` and ``report``.

    Subclasses implement ``run(config, out, options)`` and return a short summary
    string; they may add flags in ``add_command_arguments``.
    """

    command_name = None

    def add_arguments(self, parser):
        parser.add_argument(
            '--out',
            type=str,
            default=None,
            help='Work directory holding every stage\'s inputs and outputs'
        )
        parser.add_argument(
            '--seed',
            type=int,
            default=None,
            help='Seed for every random draw (default from settings)'
        )
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def add_target_argument(self, parser):
        parser.add_argument(
            '--target',
            choices=[*TARGETS, 'both'],
            default='both',
            help='Response to model: br, ve or both'
        )

    def add_model_argument(self, parser):
        parser.add_argument(
            '--model',
            choices=[*MODEL_KINDS, 'all'],
            default='all',
            help='Regression family, or all five'
        )

    @staticmethod
    def targets(options):
        return TARGETS if options.get('target', 'both') == 'both' else (options['target'],)

    @staticmethod
    def model_kinds(options):
        return MODEL_KINDS if options.get('model', 'all') == 'all' else (options['model'],)

    def build_config(self, options):
        return get_config().override(
            seed=options.get('seed'),
            tau=options.get('tau'),
            split_mode=options.get('split'),
            train_ratio=options.get('ratio'),
        )

    def handle(self, *args, **options):
        out = Path(options.get('out') or settings.CARDIORESP.get('WORK_DIR', 'work'))
        try:
            config = self.build_config(options)
            with track_run(
                self.command_name,
                seed=config.seed,
                config_hash=config.config_hash(),
                options=_jsonable(options),
                output_dir=out,
            ):
                out.mkdir(parents=True, exist_ok=True)
                summary = self.run(config, out, options)
                self.write_provenance(out, config)
        except PipelineError as e:
            logger.error(f"{self.command_name} failed: {e.__class__.__name__}: {e.message}")
            self.stderr.write(json.dumps(error_envelope(e.to_dict())))
            raise CommandError(e.message, returncode=2)

        if summary:
            self.stdout.write(self.style.SUCCESS(summary))

    def run(self, config, out, options):
        raise NotImplementedError

    def write_provenance(self, out, config):
        """Timestamps and versions live here so primary outputs stay byte-stable."""
        return write_json(out / PROVENANCE_DIR / f'{self.command_name}.json', {
            'command': self.command_name,
            'version': settings.CARDIORESP.get('VERSION'),
            'packages': package_versions(),
            'seed': config.seed,
            'config_hash': config.config_hash(),
            'config': config.to_dict(),
            'timestamp': timezone.now().isoformat(),
        })

    def read_instances(self, out):
        path = out / FEATURES_DIR / 'instances.csv'
        if not path.is_file():
            raise MissingFile(f"No feature table at {path}; run the features command first")
        return read_instances(path)
