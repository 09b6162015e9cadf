"""Seeded generators. Everything random in the package goes through ``make_rng``.

Philox is counter-based and numpy guarantees its bit stream across
platforms and releases, so seeded outputs are part of the file format.
"""
from __future__ import annotations

import zlib

import numpy as np


def make_rng(seed: int, stream: str, *counters: int) -> np.random.Generator:
    """Generator for one named stream, keyed by ``seed`` and any extra counters (e.g. epoch)."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    entropy = [seed & 0xFFFFFFFFFFFFFFFF, zlib.crc32(stream.encode()), *counters]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
