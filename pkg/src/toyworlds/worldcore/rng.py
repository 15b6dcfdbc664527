"""Deterministic 64-bit RNG (splitmix64) with a trivially serializable state.

Worlds must behave identically across platforms and Python versions, so
all world randomness goes through this generator instead of `random`.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1


class Rng:
    """splitmix64 stream; `state` is a single u64 and is the full state."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return (z ^ (z >> 31)) & MASK64

    def randrange(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randrange needs n > 0")
        # Rejection sampling keeps the distribution exactly uniform.
        limit = (MASK64 + 1) - ((MASK64 + 1) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def randint(self, a: int, b: int) -> int:
        """Uniform integer in [a, b] inclusive."""
        return a + self.randrange(b - a + 1)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def shuffle(self, seq: list) -> None:
        for i in range(len(seq) - 1, 0, -1):
            j = self.randrange(i + 1)
            seq[i], seq[j] = seq[j], seq[i]


def derive_seed(base: int, *parts: int | str) -> int:
    """Stable sub-seed for independent streams (fnv-style mixing)."""
    h = 0xCBF29CE484222325 ^ (base & MASK64)
    for part in parts:
        data = part.encode() if isinstance(part, str) else str(part).encode()
        for byte in data:
            h ^= byte
            h = (h * 0x100000001B3) & MASK64
    return h
