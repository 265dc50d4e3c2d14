"""Deterministic random-stream derivation shared by data generation and training."""

from __future__ import annotations

import numpy as np

# Stream tags keep substreams for different purposes disjoint under one seed.
STREAM_INIT = 0
STREAM_SHUFFLE = 1
STREAM_SAMPLE = 2


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return an independent generator for (seed, key).

    The same (seed, key) always yields the same stream, and distinct keys give
    statistically independent streams, so per-sample randomness does not depend
    on evaluation order or thread scheduling.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))
