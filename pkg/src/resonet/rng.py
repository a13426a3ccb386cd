"""Seeded random-stream construction.

All stochastic entry points accept an integer seed and build their streams
here. Philox is counter-based and cheap to split: batch b of a Monte Carlo
run uses ``make_rng(seed, stream=(b,))``, which is statistically independent
of every other batch stream for the same seed, so batches can be evaluated
in any order (or concurrently) and reduced deterministically.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, stream: tuple[int, ...] = ()) -> np.random.Generator:
    """Generator for (seed, stream); identical arguments give identical streams."""
    seq = np.random.SeedSequence(seed, spawn_key=tuple(stream))
    return np.random.Generator(np.random.Philox(seq))
