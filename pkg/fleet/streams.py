"""Reproducible random streams for simulation replications.

Replication r of a run seeded with s draws from Philox (a counter-based
generator) keyed by s XOR r, so replications are independent of each other
and of how they are scheduled.
"""

import numpy as np

BLOCK_SIZE = 1 << 16
_SEED_MASK = (1 << 64) - 1


def stream_seed(seed: int, replication: int) -> int:
    return (seed ^ replication) & _SEED_MASK


class ReplicationStream:
    """Buffered uniform and exponential(1) draws from one Philox stream."""

    def __init__(self, seed: int, replication: int = 0):
        self.seed = stream_seed(seed, replication)
        self._rng = np.random.Generator(np.random.Philox(self.seed))
        self._uniforms: list[float] = []
        self._u_pos = 0
        self._exponentials: list[float] = []
        self._e_pos = 0

    def uniform(self) -> float:
        """U[0, 1)."""
        if self._u_pos == len(self._uniforms):
            self._uniforms = self._rng.random(BLOCK_SIZE).tolist()
            self._u_pos = 0
        value = self._uniforms[self._u_pos]
        self._u_pos += 1
        return value

    def exponential(self) -> float:
        """Exponential with mean 1."""
        if self._e_pos == len(self._exponentials):
            self._exponentials = self._rng.standard_exponential(BLOCK_SIZE).tolist()
            self._e_pos = 0
        value = self._exponentials[self._e_pos]
        self._e_pos += 1
        return value

    def integer(self, n: int) -> int:
        """Uniform on {0, ..., n-1}."""
        return int(self.uniform() * n)

    def distinct(self, n: int, d: int) -> list[int]:
        """d distinct indices from range(n), uniformly without replacement, in random order."""
        chosen: list[int] = []
        while len(chosen) < d:
            i = int(self.uniform() * n)
            if i not in chosen:
                chosen.append(i)
        return chosen
