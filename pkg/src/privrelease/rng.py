"""Seeded random streams.

A stream is identified by ``(seed, stream)``; both are unsigned 64-bit
integers. The same pair always yields the same sequence of draws.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

_U64 = 2**64


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    if not (0 <= int(seed) < _U64) or not (0 <= int(stream) < _U64):
        raise InvalidInputError(f"seed and stream must be u64, got ({seed}, {stream})")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream)])))


def ensure_rng(rng) -> np.random.Generator:
    """Accept a Generator, an int seed, or None (fresh entropy)."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return np.random.default_rng()
    return make_rng(int(rng))
