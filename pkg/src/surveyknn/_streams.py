"""Deterministic derivation of independent RNG streams.

Every replicate of a study gets its own child stream keyed by
(master seed, study id, population size, replicate index), so parallel
replicates never share generator state and results do not depend on
execution order.  String keys are folded to 32-bit words with CRC32,
which is stable across platforms and Python versions.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_word(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part) & 0xFFFFFFFF


def seed_sequence(master: int, *parts: int | str) -> np.random.SeedSequence:
    """SeedSequence for the child stream identified by ``parts``."""
    if master < 0:
        raise ValueError("master seed must be a nonnegative integer")
    return np.random.SeedSequence([int(master)] + [_key_word(p) for p in parts])


def stream(master: int, *parts: int | str) -> np.random.Generator:
    """A PCG64 generator on the child stream identified by ``parts``."""
    return np.random.default_rng(seed_sequence(master, *parts))
