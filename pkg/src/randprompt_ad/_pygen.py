"""Pure-Python word-generation backend.

Reference implementation of the generation kernel: one SplitMix64
stream per call, and for every word one length draw followed by one
draw per character. The compiled backend (``randprompt_ad._fastgen``)
reproduces this stream bit for bit; parity is enforced by tests.
"""

from __future__ import annotations

from .rng import SplitMix64


def generate_words(
    seed: int, count: int, l_min: int, l_max: int, alphabet: str
) -> list[str]:
    """Generate ``count`` random words from a fresh stream seeded with ``seed``."""
    rng = SplitMix64(seed)
    span = l_max - l_min + 1
    n_alpha = len(alphabet)
    words = []
    for _ in range(count):
        length = l_min + rng.next_below(span)
        words.append("".join(alphabet[rng.next_below(n_alpha)] for _ in range(length)))
    return words
