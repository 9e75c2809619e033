"""Deterministic seed derivation for independent replications.

Every source of randomness in the package (PRNG seeds, Philox keys, Halton
starts and digit permutations, Sobol' scrambles) is derived from a single
64-bit root seed through ``derive_key``, so a run is reproducible from
``(seed, generator, replication)`` alone, on any platform.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15

# Stable ids so derived streams never collide across generator families.
GENERATOR_IDS = {
    "twister": 1,
    "xorwow": 2,
    "philox": 3,
    "rasrap": 4,
    "sobol": 5,
    "kakutani": 6,
}


def splitmix64(z: int) -> int:
    """One output of the splitmix64 mixing function (finalizer form)."""
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_key(*parts: int) -> int:
    """Mix a tuple of integers into one 64-bit key.

    Parts are absorbed in order, each through a full splitmix64 round, so
    (seed, gen, m) and (seed, gen, m') give unrelated keys.
    """
    h = 0
    for p in parts:
        h = splitmix64((h ^ (int(p) & _MASK64)) & _MASK64)
    return h


def derive_words(key: int, count: int) -> list[int]:
    """Expand a key into `count` 32-bit words via the splitmix64 stream."""
    words = []
    z = key
    while len(words) < count:
        z = splitmix64(z)
        words.append(z & 0xFFFFFFFF)
        if len(words) < count:
            words.append((z >> 32) & 0xFFFFFFFF)
    return words[:count]


def derive_rng(*parts: int) -> np.random.Generator:
    """A numpy Generator keyed by the derived 64-bit value.

    Used for structured randomization draws (digit permutations, scramble
    matrices); PCG64 output is stable across numpy versions and platforms.
    """
    return np.random.Generator(np.random.PCG64(derive_key(*parts)))
