"""Portable counter-based pseudo-random generator.

The generator implements SplitMix64 in counter mode: draw ``i`` of a
stream seeded with ``s`` is ``mix64((s + (i + 1) * GAMMA) mod 2**64)``.
Because every draw is a pure function of ``(seed, counter)``, the scalar
Python path, the vectorised NumPy path and the compiled generation
kernel all produce bit-identical streams on any platform.

Reference values (seed 0): the first three 64-bit outputs are
0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4 and 0x06C45D188009454F.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# 2**-53, the spacing of doubles in [1, 2); multiplying the top 53 bits
# of a draw by this constant yields a double uniform on [0, 1).
_DOUBLE_UNIT = 1.0 / (1 << 53)

_U64_GAMMA = np.uint64(_GAMMA)
_U64_MIX1 = np.uint64(_MIX1)
_U64_MIX2 = np.uint64(_MIX2)


def mix64(z: int) -> int:
    """Finalisation mix of SplitMix64 (pure Python integers)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorised :func:`mix64` on a uint64 array (wrapping multiply)."""
    z = (z ^ (z >> np.uint64(30))) * _U64_MIX1
    z = (z ^ (z >> np.uint64(27))) * _U64_MIX2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Deterministic stream of 64-bit draws addressed by a counter.

    Mixing consumes draws: every call that produces one value advances
    the counter by exactly one, so interleaving scalar and array calls
    keeps the stream reproducible.
    """

    __slots__ = ("seed", "_counter")

    def __init__(self, seed: int) -> None:
        if not 0 <= seed <= _MASK64:
            raise ConfigError(f"seed must fit in 64 bits, got {seed}")
        self.seed = int(seed)
        self._counter = 0

    @property
    def position(self) -> int:
        """Number of draws consumed so far."""
        return self._counter

    def next_u64(self) -> int:
        """Next raw 64-bit draw as a Python int."""
        self._counter += 1
        return mix64((self.seed + self._counter * _GAMMA) & _MASK64)

    def next_below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` via 128-bit multiply-high.

        ``floor(x * bound / 2**64)`` maps the 64-bit draw ``x`` onto the
        range without modulo bias beyond ``bound / 2**64``, which is
        negligible for the small bounds used here.
        """
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return (self.next_u64() * bound) >> 64

    def next_double(self) -> float:
        """Uniform double in ``[0, 1)`` from the top 53 bits of a draw."""
        return (self.next_u64() >> 11) * _DOUBLE_UNIT

    def u64_array(self, n: int) -> np.ndarray:
        """Next ``n`` raw draws as a uint64 array (vectorised path)."""
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n}")
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        return _mix64_array(np.uint64(self.seed) + idx * _U64_GAMMA)

    def below_array(self, n: int, bound: int) -> np.ndarray:
        """Next ``n`` uniform integers in ``[0, bound)`` as uint64.

        The multiply-high is evaluated in 32-bit halves,
        ``((hi * bound) + ((lo * bound) >> 32)) >> 32``, which is exact
        for ``bound < 2**32`` and matches :meth:`next_below` bit for bit.
        """
        if not 0 < bound < (1 << 32):
            raise ValueError(f"bound must be in [1, 2**32), got {bound}")
        x = self.u64_array(n)
        b = np.uint64(bound)
        lo = (x & np.uint64(0xFFFFFFFF)) * b
        hi = (x >> np.uint64(32)) * b
        return (hi + (lo >> np.uint64(32))) >> np.uint64(32)

    def double_array(self, n: int) -> np.ndarray:
        """Next ``n`` uniform doubles in ``[0, 1)`` as float64."""
        return (self.u64_array(n) >> np.uint64(11)).astype(np.float64) * _DOUBLE_UNIT

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle consuming ``len(items) - 1`` draws."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]
