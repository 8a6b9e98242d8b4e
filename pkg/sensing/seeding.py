"""
Deterministic random substreams.

Every random draw in the project comes from one integer seed. A substream is
addressed by a path of names, e.g. ``substream(seed, 'synth', 'subject-03', 'ecg')``,
so adding a consumer never shifts the numbers another consumer sees.

Documented substreams:
    synth/<session>/{beats,morphology,imu,resp,trajectory}
    split/<ratio>                 hold-out partitions
    rf/<target>/<context>         bootstrap draws and predictor subsets
    rf-oob/<target>/<context>     OOB permutations
    gpr/<target>/<context>        optimizer restarts
"""

import zlib

import numpy as np


def _spawn_key(names):
    return tuple(zlib.crc32(str(name).encode('utf-8')) for name in names)


def substream(seed, *names):
    """Return a ``numpy.random.Generator`` for the named substream of ``seed``."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=_spawn_key(names))
    return np.random.default_rng(sequence)


def child_seed(seed, *names):
    """Derive a plain integer seed, for APIs that take ``random_state``."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=_spawn_key(names))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])
