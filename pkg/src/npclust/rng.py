"""Deterministic RNG stream derivation.

Every replicate, chain, ordering or particle run owns a child stream derived
from (master seed, *path indices).  Children with distinct paths are
statistically independent, and the derivation does not depend on the order in
which streams are created, so parallel schedules cannot change results.
"""

import numpy as np


def seed_sequence(master_seed: int, *path: int) -> np.random.SeedSequence:
    """SeedSequence keyed by (master_seed, *path)."""
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF] + [int(p) for p in path]
    return np.random.SeedSequence(entropy)


def generator(master_seed: int, *path: int) -> np.random.Generator:
    """PCG64 Generator for the stream keyed by (master_seed, *path)."""
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, *path)))


def derive_seed(master_seed: int, *path: int) -> int:
    """64-bit child seed for components that take a scalar seed."""
    st = seed_sequence(master_seed, *path).generate_state(2)
    return int(st[0]) << 32 | int(st[1])


def generator_from_state(state: dict) -> np.random.Generator:
    """Rebuild a PCG64 Generator from a serialized bit-generator state dict."""
    bg = np.random.PCG64()
    bg.state = state
    return np.random.Generator(bg)
