"""Reproducible random-number streams.

Every piece of randomness in the package flows from one 64-bit master seed
through a keyed stream: ``stream(master_seed, purpose, *indices)`` builds a
Philox counter-based generator whose output depends only on the key, never on
execution order or worker count. Purpose strings are hashed stably (blake2s),
so the same (seed, purpose, indices) triple is bit-reproducible across runs
and platforms.
"""

import hashlib

import numpy as np


def _purpose_code(purpose: str) -> int:
    digest = hashlib.blake2s(purpose.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(master_seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """Independent generator for the given key, reproducible at any worker count."""
    key = (_purpose_code(purpose),) + tuple(int(i) for i in indices)
    seq = np.random.SeedSequence(int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


def uniform_open_closed(gen: np.random.Generator, size) -> np.ndarray:
    """Uniforms on (0, 1]; zero is excluded so inverse-CDF draws stay finite."""
    return 1.0 - gen.random(size)
