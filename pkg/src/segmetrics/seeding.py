"""Deterministic seed derivation for per-record randomness.

Corpus runs must produce identical output no matter how records are
scheduled across workers, so every record gets its own generator seeded
from the global seed and a stable hash of the record id. Python's
built-in hash() is salted per process and therefore useless here; we use
blake2b instead.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stable_hash64(text: str) -> int:
    """Map a string to a stable 64-bit integer (process-independent)."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def record_seed(global_seed: int, record_id: str) -> int:
    """Per-record seed: global seed XORed with a stable hash of the id."""
    return (int(global_seed) & 0xFFFFFFFFFFFFFFFF) ^ stable_hash64(record_id)


def record_rng(global_seed: int, record_id: str) -> np.random.Generator:
    return np.random.default_rng(record_seed(global_seed, record_id))
