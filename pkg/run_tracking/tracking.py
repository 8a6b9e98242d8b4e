"""
Ledger writes for management command runs.
"""

from contextlib import contextmanager
import logging
import time

from django.db import DatabaseError

from .models import CommandRun

logger = logging.getLogger(__name__)


class RunHandle:
    """Mutable view of the run in progress; ``record`` is None when the ledger is unavailable."""

    def __init__(self, record):
        self.record = record

    @property
    def run_id(self):
        return self.record.run_id if self.record else None


def _save(record, **changes):
    for key, value in changes.items():
        setattr(record, key, value)
    try:
        record.save()
        return record
    except DatabaseError as e:
        logger.error(f"Could not write run ledger entry for {record.command}: {str(e)}")
        return None


@contextmanager
def track_run(command, seed=None, config_hash='', options=None, output_dir=''):
    """
    Record a command run, marking it succeeded or failed on exit.

    Exceptions from the wrapped block propagate unchanged; ledger failures are only logged.
    """
    start = time.time()
    record = _save(CommandRun(
        command=command,
        seed=seed,
        config_hash=config_hash or '',
        options=options or {},
        output_dir=str(output_dir or ''),
    ))
    handle = RunHandle(record)
    try:
        yield handle
    except Exception as e:
        if record is not None:
            _save(
                record,
                status=CommandRun.STATUS_FAILED,
                duration_ms=round((time.time() - start) * 1000, 2),
                error_type=e.__class__.__name__,
                error_message=getattr(e, 'message', str(e)),
            )
        raise
    else:
        if record is not None:
            _save(
                record,
                status=CommandRun.STATUS_SUCCEEDED,
                duration_ms=round((time.time() - start) * 1000, 2),
            )
