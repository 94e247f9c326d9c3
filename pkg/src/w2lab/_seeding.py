"""Splittable seed derivation.

Every stochastic routine takes a 64-bit master seed and derives child seeds
with ``derive_seed(master, *indices)``.  The derivation is a splitmix64
scramble chain: child = scramble(scramble(master) ^ mix(index_0)) ...  It is
pure arithmetic, so parallel task k and the same task run serially see the
same stream, and two distinct index paths never share a stream in practice.
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state, returning (new_state, output)."""
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    z = z ^ (z >> 31)
    return state, z


def derive_seed(master: int, *indices: int) -> int:
    """Derive a 64-bit child seed from a master seed and an index path."""
    _, s = splitmix64(master & _MASK)
    for ix in indices:
        s = (s ^ ((int(ix) & _MASK) * _GOLDEN)) & _MASK
        _, s = splitmix64(s)
    return s


def path_seeds(master: int, task: int, n_paths: int) -> np.ndarray:
    """Per-path kernel seeds for one task: vectorized splitmix64 scramble."""
    base = derive_seed(master, task)
    ids = np.arange(1, n_paths + 1, dtype=np.uint64)
    s = (np.uint64(base) + ids * np.uint64(_GOLDEN)) & np.uint64(_MASK)
    # one scramble round so adjacent path ids decorrelate
    z = (s + np.uint64(_GOLDEN)) & np.uint64(_MASK)
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(_MASK)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(_MASK)
    z = z ^ (z >> np.uint64(31))
    return z


def rng_for(master: int, *indices: int) -> np.random.Generator:
    """NumPy generator seeded from the derived child seed."""
    return np.random.default_rng(derive_seed(master, *indices))
