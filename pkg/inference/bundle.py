"""
Versioned JSON model bundles: the context classifier plus the trained BankGroups.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

from django.conf import settings

from .context_classifier import TotalBoostEnsemble
from .exceptions import BundleFormatError, BundleUnavailable
from .pipeline import BankGroup

logger = logging.getLogger(__name__)

BUNDLE_FORMAT = 'cardioresp-models'
BUNDLE_VERSION = 1


@dataclass
class ModelBundle:
    classifier: TotalBoostEnsemble
    groups: Dict[Tuple[str, str], BankGroup] = field(default_factory=dict)
    config_hash: Optional[str] = None
    layout: Optional[dict] = None

    def group(self, target, kind):
        try:
            return self.groups[(target, kind)]
        except KeyError:
            available = ', '.join(f'{t}/{k}' for t, k in sorted(self.groups))
            raise BundleUnavailable(f"No {target}/{kind} models in the bundle (available: {available or 'none'})")

    def to_dict(self):
        return {
            'format': BUNDLE_FORMAT,
            'version': BUNDLE_VERSION,
            'config_hash': self.config_hash,
            'layout': self.layout,
            'classifier': self.classifier.to_dict(),
            'groups': [
                {'kind': kind, **self.groups[(target, kind)].to_dict()}
                for target, kind in sorted(self.groups)
            ],
        }

    @classmethod
    def from_dict(cls, data):
        if data.get('format') != BUNDLE_FORMAT:
            raise BundleFormatError(f"Not a model bundle (format {data.get('format')!r})")
        if data.get('version') != BUNDLE_VERSION:
            raise BundleFormatError(f"Unsupported bundle version {data.get('version')!r}")
        try:
            groups = {}
            for entry in data['groups']:
                group = BankGroup.from_dict(entry)
                groups[(group.target, entry['kind'])] = group
            return cls(
                classifier=TotalBoostEnsemble.from_dict(data['classifier']),
                groups=groups,
                config_hash=data.get('config_hash'),
                layout=data.get('layout'),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise BundleFormatError(f"Malformed model bundle: {e}")


def save_bundle(bundle, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(bundle.to_dict(), separators=(',', ':'))
    path.write_text(text, encoding='utf-8')
    logger.info(f"Saved model bundle with {len(bundle.groups)} groups to {path}")
    return path


def load_bundle(path):
    path = Path(path)
    if not path.is_file():
        raise BundleUnavailable(f"Model bundle not found at {path}")
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise BundleFormatError(f"Model bundle {path} is not valid JSON: {e}")
    return ModelBundle.from_dict(data)


_cache = {}


def get_bundle(path=None):
    """Bundle at ``path`` (default ``CARDIORESP['MODEL_BUNDLE_PATH']``), reloaded when the file changes."""
    path = Path(path or settings.CARDIORESP.get('MODEL_BUNDLE_PATH', ''))
    if not path.is_file():
        raise BundleUnavailable(f"Model bundle not found at {path}")
    stamp = path.stat().st_mtime_ns
    cached = _cache.get(str(path))
    if cached is None or cached[0] != stamp:
        cached = (stamp, load_bundle(path))
        _cache[str(path)] = cached
    return cached[1]
