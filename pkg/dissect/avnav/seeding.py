from __future__ import annotations

import logging
from enum import IntEnum

import numpy as np

log = logging.getLogger(__name__)


class Stream(IntEnum):
    MAPS = 0
    EPISODES = 1
    SCENARIO = 2
    AUGMENT = 3
    POLICY = 4
    INIT = 5


def stream_rng(seed: int, stream: Stream, index: int = 0) -> np.random.Generator:
    """Return the generator for ``(seed, stream, index)``.

    Every generator is an independent Philox counter stream, so the draws of one episode or environment
    never depend on how many draws another one made.
    """
    if seed < 0 or index < 0:
        raise ValueError(f"Seed and stream index must be nonnegative: {seed}, {index}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(int(stream), index))))


class SeedStreams:
    def __init__(self, seed: int):
        self.seed = seed

    def __repr__(self) -> str:
        return f"<SeedStreams seed={self.seed}>"

    def __call__(self, stream: Stream, index: int = 0) -> np.random.Generator:
        return stream_rng(self.seed, stream, index)

    def map_seed(self, index: int) -> int:
        return int(self(Stream.MAPS, index).integers(2**32))

    def episode(self, index: int) -> np.random.Generator:
        return self(Stream.EPISODES, index)

    def scenario(self, index: int) -> np.random.Generator:
        return self(Stream.SCENARIO, index)

    def augment(self, index: int) -> np.random.Generator:
        return self(Stream.AUGMENT, index)

    def policy(self, index: int) -> np.random.Generator:
        return self(Stream.POLICY, index)

    def init(self) -> np.random.Generator:
        return self(Stream.INIT)


def seed_everything(seed: int) -> SeedStreams:
    log.debug("Deriving seed streams from run seed %d", seed)
    return SeedStreams(seed)
