"""Seedable, platform-independent random numbers.

The sampler needs golden outputs that survive OS, architecture and Python
version changes, which rules out random.Random (Mersenne internals are
stable but float handling is not guaranteed across implementations) and
numpy's generators (version-dependent stream guarantees). SplitMix64 is
tiny enough to carry here in full: 64-bit wrapping arithmetic, three xor
shifts, two multiplies. Reference: Steele, Lea and Vigna, "Fast splittable
pseudorandom number generators" (the java.util.SplittableRandom algorithm).
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Deterministic 64-bit generator; one instance per sampling run."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
        self._state = seed & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """A float in [0, 1) with 53 random bits, the IEEE double mantissa."""
        return (self.next_uint64() >> 11) * 2.0**-53
