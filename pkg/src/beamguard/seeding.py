"""Deterministic per-episode random streams.

Every episode draws from ``SeedSequence(seed, spawn_key=(stream, episode))``
so results do not depend on how episodes are scheduled across workers.
"""
import numpy as np

STREAM_INIT = 0
STREAM_SHUFFLE = 1
STREAM_TRAIN = 10  # an episode uses stream, stream + 1, stream + 2
STREAM_EVAL = 100
STREAM_BASELINE = 200


def episode_rng(seed: int, stream: int, episode: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, episode)))
