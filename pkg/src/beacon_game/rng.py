"""Seeded, splittable random streams.

A stream is identified by ``(seed, stream_id)`` plus an optional path of
sub-stream tags, and maps onto a numpy ``SeedSequence`` spawn key so that
distinct ids give independent generators.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RandomStream:
    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def substream(self, tag: int) -> "RandomStream":
        return RandomStream(self.seed, self.stream_id, self.path + (int(tag),))

    def generator(self) -> np.random.Generator:
        # Each call returns a fresh generator positioned at the start of the stream.
        seq = np.random.SeedSequence(
            int(self.seed) & 0xFFFFFFFFFFFFFFFF,
            spawn_key=(int(self.stream_id),) + self.path,
        )
        return np.random.default_rng(seq)


def as_generator(stream) -> np.random.Generator:
    """Accept a RandomStream, a Generator, or an int seed."""
    if isinstance(stream, np.random.Generator):
        return stream
    if isinstance(stream, RandomStream):
        return stream.generator()
    return RandomStream(int(stream)).generator()


def standard_complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """CN(0, 1) draws: real and imaginary parts each with variance 1/2."""
    z = rng.standard_normal(size=size + (2,) if isinstance(size, tuple) else (size, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)
