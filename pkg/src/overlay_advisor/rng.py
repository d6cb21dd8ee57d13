"""SplitMix64 random streams.

Every random decision in the package (bootstrap resampling, per-node feature
subsets, synthetic noise, train/test shuffles) draws from this generator so that
results depend only on the seed, never on the Python or numpy version.

Stream derivation: ``derive_seed(seed, k1, k2, ...)`` folds each key into the
state with one SplitMix64 step::

    state = seed mod 2**64
    for k in keys:
        state = mix64(state + GOLDEN * (k + 1))

``mix64`` is the SplitMix64 finalizer (Steele, Lea & Flood 2014).  Tree ``i`` of
a forest with seed ``s`` uses ``SplitMix64(derive_seed(s, i))``.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    state = seed & MASK64
    for k in keys:
        state = mix64(state + GOLDEN * (k + 1))
    return state


class SplitMix64:
    """Minimal SplitMix64 generator.

    >>> g = SplitMix64(0)
    >>> hex(g.next_u64())
    '0xe220a8397b1dcdaf'
    """

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def sample(self, n: int, k: int) -> list[int]:
        """``k`` distinct indices from ``range(n)`` via partial Fisher-Yates."""
        if not 0 <= k <= n:
            raise ValueError("need 0 <= k <= n")
        pool = list(range(n))
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]
