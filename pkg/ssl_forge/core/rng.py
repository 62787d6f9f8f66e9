"""
Seeded random streams.

All randomness in the library flows through `SeededStream`, a thin wrapper
over numpy's PCG64 bit generator. Uniform doubles come straight from PCG64;
Gaussian draws are produced by Box-Muller on that uniform stream so that the
normal sequence is defined by the documented transform rather than by
numpy's internal sampler.
"""
from typing import List, Optional, Sequence

import numpy as np


class SeededStream:
    """A reproducible random stream identified by a seed."""

    def __init__(self, seed: int = 0, seed_sequence: Optional[np.random.SeedSequence] = None):
        self.seed_sequence = seed_sequence or np.random.SeedSequence(int(seed))
        self._generator = np.random.Generator(np.random.PCG64(self.seed_sequence))

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0):
        """Uniform draws on [low, high)."""
        u = self._generator.random(size)
        return low + (high - low) * u

    def gaussian(self, size=None, mean: float = 0.0, sd: float = 1.0):
        """Normal draws via Box-Muller; consumes two uniforms per pair of outputs."""
        shape = () if size is None else (size if isinstance(size, tuple) else (int(size),))
        count = int(np.prod(shape)) if shape else 1
        n_pairs = (count + 1) // 2
        u1 = 1.0 - self._generator.random(n_pairs)
        u2 = self._generator.random(n_pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.empty(2 * n_pairs)
        z[0::2] = radius * np.cos(angle)
        z[1::2] = radius * np.sin(angle)
        z = mean + sd * z[:count]
        if not shape:
            return float(z[0])
        return z.reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(int(n))

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        """Indices drawn from range(n)."""
        return self._generator.choice(int(n), size=int(size), replace=replace)

    def integers(self, low: int, high: int, size=None):
        return self._generator.integers(low, high, size=size)

    def pick(self, values: Sequence):
        """One element of `values`, uniformly."""
        return values[int(self._generator.integers(0, len(values)))]

    def spawn(self, n: int) -> List["SeededStream"]:
        """Independent child streams.

        The parent's own draws are untouched, but its seed sequence counts
        spawned children: a second call returns new streams, not the first ones
        again.
        """
        return [SeededStream(seed_sequence=child) for child in self.seed_sequence.spawn(n)]


def make_stream(seed) -> SeededStream:
    """Accept an int seed or an existing stream."""
    if isinstance(seed, SeededStream):
        return seed
    return SeededStream(int(seed))
