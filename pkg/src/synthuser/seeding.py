"""Deterministic seed derivation and PRNG construction.

Every source of randomness in the package is a ``random.Random`` instance
(CPython's Mersenne Twister, stable across platforms and versions) seeded
with a 64-bit integer. Sub-seeds are derived from the master seed and a
stream label by hashing, so adding or removing streams never perturbs the
others.
"""

from __future__ import annotations

import hashlib
import random

MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, label: str) -> int:
    """Derive a 64-bit sub-seed for a named stream (e.g. ``agent-0``)."""
    digest = hashlib.sha256(f"{master_seed & MASK64}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def make_rng(master_seed: int, label: str) -> random.Random:
    return random.Random(derive_seed(master_seed, label))
