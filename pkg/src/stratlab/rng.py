"""Deterministic seed derivation for parallel Monte-Carlo trials.

One 64-bit master seed drives everything. Each trial owns a family of
independent streams (environment draws, one per learner, side-signal and
pure-realization channels) whose seeds are derived by chaining SplitMix64
finalizers, so results never depend on worker count or execution order.
"""

from __future__ import annotations

import random

_MASK = (1 << 64) - 1

# Stream tags, fixed so that changing one player's algorithm never shifts
# the draws seen by the environment or the other player.
ENV_STREAM = 0
LEARNER1_STREAM = 1
LEARNER2_STREAM = 2
SIDE1_STREAM = 3
SIDE2_STREAM = 4
REALIZE1_STREAM = 5
REALIZE2_STREAM = 6


def splitmix64(z: int) -> int:
    """SplitMix64 finalizer; bijective mixing on 64-bit integers."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master_seed: int, *indices: int) -> int:
    """Derive a child seed by folding each index through SplitMix64."""
    s = master_seed & _MASK
    for ix in indices:
        s = splitmix64(s ^ splitmix64(ix & _MASK))
    return s


def stream(master_seed: int, trial_index: int, tag: int) -> random.Random:
    """The (trial, tag) random stream as a seeded random.Random."""
    return random.Random(derive_seed(master_seed, trial_index, tag))
