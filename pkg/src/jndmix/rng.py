"""Seeded randomness shared by augmentation and the dataset protocol.

Every random stream is derived from a 64-bit seed through SplitMix64 and
then drives numpy's PCG64 bit generator. PCG64 output for a given seed is
stable across platforms; the higher-level ``Generator`` methods are stable
within a numpy release, which is the determinism guarantee this package
makes.
"""

import numpy as np

MASK64 = (1 << 64) - 1

_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """Return the first SplitMix64 output for state ``x`` (a 64-bit mix)."""
    z = (x + _GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Per-item seed: ``splitmix64(master_seed XOR index)``.

    The result depends only on the pair, so items can be processed in any
    order or on any number of workers.
    """
    return splitmix64((master_seed ^ index) & MASK64)


def make_rng(seed: int) -> np.random.Generator:
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(splitmix64(seed)))
