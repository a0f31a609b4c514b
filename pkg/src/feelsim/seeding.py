"""Seed derivation helpers.

Every random draw in the simulator goes through a generator built from an
explicit key path, e.g. ``rng(master_seed, "channel", round_idx)``, so two
calls with the same keys always produce the same stream and distinct keys
never share state.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"seed keys must be non-negative, got {key}")
        return int(key)
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    raise TypeError(f"unsupported seed key type: {type(key).__name__}")


def seed_sequence(*keys) -> np.random.SeedSequence:
    return np.random.SeedSequence([_key_to_int(k) for k in keys])


def rng(*keys) -> np.random.Generator:
    """Return a PCG64 generator keyed by ``keys``."""
    return np.random.default_rng(seed_sequence(*keys))


def derive_seed(*keys) -> int:
    """Collapse a key path into a single 63-bit integer seed."""
    return int(seed_sequence(*keys).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
