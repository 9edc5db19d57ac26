"""SplitMix64 pseudo-random streams.

Every seeded choice in the package (symbol pick, weight init, shuffling,
dropout masks) draws from SplitMix64.  The generator is counter based, so a
block of ``n`` outputs can be produced with vectorised uint64 arithmetic and
still match the scalar recurrence bit for bit on every platform.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 finaliser applied to a single 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, *tags) -> int:
    """Derive an independent 64-bit seed from ``seed`` and a tag path.

    Tags are hashed, so the result depends on their values only, never on
    call order elsewhere in the program.
    """
    out = seed & MASK64
    for tag in tags:
        digest = hashlib.sha256(repr(tag).encode("utf-8")).digest()
        out = mix64(out ^ int.from_bytes(digest[:8], "little"))
    return out


class SplitMix64:
    """Stateful SplitMix64 stream."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def u64(self, n: int) -> np.ndarray:
        """Next ``n`` outputs as a uint64 array (same values as ``n`` calls)."""
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)
            out = _mix64_array(z)
        self.state = (self.state + n * GOLDEN_GAMMA) & MASK64
        return out

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1) from the top 53 bits of each output."""
        return (self.u64(n) >> np.uint64(11)).astype(np.float64) * (2.0**-53)

    def below(self, bound: int) -> int:
        """One draw reduced modulo ``bound``."""
        return self.next_u64() % bound

    def permutation(self, n: int) -> np.ndarray:
        """A permutation of ``range(n)`` ordered by random 64-bit keys."""
        return np.argsort(self.u64(n), kind="stable")
