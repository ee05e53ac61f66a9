"""Deterministic 64-bit seed derivation for ensembles and sweeps.

Sub-seeds come from SplitMix64 applied to base_seed + index * golden-gamma,
the standard 64-bit mix; the same (base_seed, index) pair yields the same
stream on any platform.  Generators are numpy PCG64.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

GENERATOR_NAME = "numpy PCG64, sub-seeds via splitmix64(base + index)"


def splitmix64(x: int) -> int:
    x &= MASK64
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & MASK64
    return (x ^ (x >> 31)) & MASK64


def split_seed(base_seed: int, index: int) -> int:
    """Sub-seed for ensemble member / sweep cell `index`."""
    return splitmix64((base_seed + index * GOLDEN_GAMMA) & MASK64)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
