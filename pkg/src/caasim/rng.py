"""Deterministic per-entity random streams.

Every generated object in the simulator (patch geometry, phase field, fading
trace, noise, direction draw, ...) gets its own numpy Generator whose seed is
derived from the corpus master seed plus a path of identifiers, e.g.
``stream(master, "phase", "geometry", antenna_id)``. Derivation uses
splitmix64 mixing, so streams are independent of generation order and safe to
draw concurrently.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> int:
    """One splitmix64 output step for a 64-bit state."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _fold(state: int, value: int) -> int:
    return splitmix64(state ^ (value & _MASK64))


def derive_seed(master_seed: int, *path: int | str) -> int:
    """Mix a master seed with a path of ints/strings into a 64-bit seed.

    Strings are folded in 8-byte little-endian chunks so the result does not
    depend on Python's per-process hash randomization.
    """
    state = splitmix64(master_seed & _MASK64)
    for part in path:
        if isinstance(part, str):
            raw = part.encode("utf-8")
            state = _fold(state, len(raw))
            for i in range(0, len(raw), 8):
                state = _fold(state, int.from_bytes(raw[i:i + 8], "little"))
        else:
            state = _fold(state, int(part))
    return state


def stream(master_seed: int, *path: int | str) -> np.random.Generator:
    """A PCG64 Generator seeded from ``derive_seed(master_seed, *path)``."""
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, *path)))
