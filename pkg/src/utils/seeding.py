#!/usr/bin/env python3
"""
Redescribe Seeding
Named random sub-streams derived from one master seed
"""

import os
import zlib
from typing import Optional, Union

import numpy as np

SEED_ENV_VAR = 'REDESCRIBE_SEED'

Name = Union[str, int]


def _name_key(name: Name) -> int:
    return zlib.crc32(str(name).encode('utf-8'))


def substream(seed: int, *names: Name) -> np.random.SeedSequence:
    """Seed sequence for the stream addressed by ``names`` under ``seed``.

    The same (seed, names) always yields the same stream, independent of the
    order in which streams are requested or which worker requests them.
    """
    return np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(_name_key(n) for n in names)
    )


def make_rng(seed: int, *names: Name) -> np.random.Generator:
    """Generator over the named sub-stream."""
    return np.random.default_rng(substream(seed, *names))


def child_seed(seed: int, *names: Name) -> int:
    """Plain integer seed for the named sub-stream (for nested derivation)."""
    return int(substream(seed, *names).generate_state(1, dtype=np.uint32)[0])


def seed_from_env(default: Optional[int]) -> Optional[int]:
    """Seed override taken from the environment, if set."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw.strip() == '':
        return default
    return int(raw)
