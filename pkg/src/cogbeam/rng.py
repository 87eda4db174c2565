"""Reproducible random streams.

Every random draw in the package goes through a :class:`SeededStream`, a
``(seed, stream_id)`` pair backed by numpy's counter-based Philox bit
generator.  Streams can be split into independent substreams so that Monte
Carlo workers share a seed without coordinating.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SeededStream:
    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0 or any(p < 0 for p in self.path):
            raise ValueError("seed, stream_id and substream indices must be non-negative")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at draw index 0 of this stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, *index: int) -> "SeededStream":
        return SeededStream(self.seed, self.stream_id, self.path + tuple(int(i) for i in index))


def as_generator(source) -> np.random.Generator:
    """Accept a Generator, a SeededStream, an integer seed or None (seed 0)."""
    if source is None:
        return SeededStream(0).generator()
    if isinstance(source, np.random.Generator):
        return source
    if isinstance(source, SeededStream):
        return source.generator()
    if isinstance(source, (int, np.integer)):
        return SeededStream(int(source)).generator()
    raise TypeError(f"cannot build a random generator from {type(source).__name__}")
