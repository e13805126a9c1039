"""Deterministic random streams.

Every random draw in the package comes from a Philox counter-based generator
keyed by a ``SeedSequence`` built from the 64-bit master seed followed by a
path of integers naming the consumer, e.g. ``(seed, ROW, r)`` for row ``r`` of
a sampled matrix or ``(seed, TRIAL, t)`` for Monte-Carlo trial ``t``.  Two
streams with different paths are statistically independent and a stream
never depends on how many other streams were drawn before it.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# Stream tags; fixed so that stored manifests replay identically.
ROW = 1
TRIAL = 2
GRAPH = 3
MATCHING = 4
SEARCH = 5
SUB = 6


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for ``seed`` split along ``path``."""
    entropy = [int(seed) & MASK64, *(int(p) & MASK64 for p in path)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def child_seed(seed: int, *path: int) -> int:
    """Derive a 64-bit seed for a sub-experiment."""
    ss = np.random.SeedSequence([int(seed) & MASK64, *(int(p) & MASK64 for p in path)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
