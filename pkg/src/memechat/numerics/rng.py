"""Counter-based random streams: draw n depends only on (seed, counter)."""

from __future__ import annotations

import numpy as np


class RngStream:
    """Deterministic stream of uniform draws keyed by seed and call counter.

    Each call derives an independent generator from (seed, counter), so
    replaying a run with the same seed reproduces every mask bit-for-bit
    regardless of how draws interleave with other streams.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed)
        self.counter = int(counter)

    def uniform(self, shape) -> np.ndarray:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(self.counter,))
        )
        self.counter += 1
        return rng.random(shape)


def derive_seed(*parts: int) -> int:
    """Mix integers into a single non-negative 63-bit seed."""
    h = 0x9E3779B97F4A7C15
    for p in parts:
        h ^= (int(p) + 0x9E3779B97F4A7C15 + (h << 6) + (h >> 2)) & 0xFFFFFFFFFFFFFFFF
        h &= 0xFFFFFFFFFFFFFFFF
    return h >> 1
