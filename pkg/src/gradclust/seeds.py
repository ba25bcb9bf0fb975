"""Deterministic randomness plumbing.

A run owns a single 64-bit root seed.  Every randomized stage draws from its
own named stream derived here, so perturbing one stage (e.g. positive
sampling) never shifts the random sequence seen by another.
"""

from __future__ import annotations

import numpy as np

# Stream tags; each (root, stream, *keys) tuple owns an independent sequence.
STREAM_INIT = 1
STREAM_LEIDEN = 2
STREAM_SAMPLING = 3
STREAM_REFINE = 4


def child_seed(root: int, *keys: int) -> int:
    """Derive a 64-bit integer seed from the root seed and integer keys."""
    state = np.random.SeedSequence([int(root), *[int(k) for k in keys]]).generate_state(2)
    return (int(state[0]) << 32) | int(state[1])


def child_rng(root: int, *keys: int) -> np.random.Generator:
    """Generator seeded from the (root, *keys) stream."""
    return np.random.default_rng(np.random.SeedSequence([int(root), *[int(k) for k in keys]]))
