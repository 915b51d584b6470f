"""Deterministic RNG stream derivation.

Every random draw in the package flows from an explicit key chain
(master seed -> topology -> stage -> entity).  Streams are derived with
``numpy.random.SeedSequence`` so results never depend on execution
order, parallelism degree, or platform.
"""
from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "derive_rng"]

_MASK64 = (1 << 64) - 1


def _key_words(keys):
    words = []
    for key in keys:
        if isinstance(key, (bool, float)):
            raise TypeError(f"seed keys must be ints or strings, got {key!r}")
        if isinstance(key, (int, np.integer)):
            words.append(int(key) & _MASK64)
        elif isinstance(key, str):
            digest = hashlib.sha256(key.encode("utf-8")).digest()
            words.append(int.from_bytes(digest[:8], "little"))
        else:
            raise TypeError(f"seed keys must be ints or strings, got {key!r}")
    return words


def derive_seed(*keys) -> int:
    """Collapse a key chain into a stable 64-bit integer seed."""
    state = np.random.SeedSequence(_key_words(keys)).generate_state(1, np.uint64)
    return int(state[0])


def derive_rng(*keys) -> np.random.Generator:
    """Return a PCG64 generator for the stream named by ``keys``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(_key_words(keys))))
