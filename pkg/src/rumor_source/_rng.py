"""Seed derivation for reproducible, scheduling-independent experiments.

All randomness in the simulator flows from 64-bit seeds.  Per-trial seeds
are derived from a base seed with the splitmix64 finalizer, so trial i of a
campaign draws the same stream whether it runs first, last, or on another
worker process.
"""

from __future__ import annotations

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """splitmix64 output function (Steele, Lea, Flood 2014)."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed: int, index: int) -> int:
    """Per-trial seed: mix64(base + (index + 1) * golden gamma), mod 2**64."""
    if index < 0:
        raise ValueError("index must be nonnegative")
    return mix64((base_seed + (index + 1) * _GOLDEN) & _MASK64)
