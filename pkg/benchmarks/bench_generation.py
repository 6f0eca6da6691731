"""Benchmark the compiled word-generation kernel against the pure one.

Usage::

    python3 benchmarks/bench_generation.py [--counts 1000,10000,100000]
                                           [--repeats 5] [--seed 0]

Both backends draw from identical SplitMix64 streams, so outputs are
checked for equality while timing. The compiled backend is skipped
(with a note) when the extension is not built.
"""

from __future__ import annotations

import argparse
import time

from randprompt_ad import _pygen
from randprompt_ad.prompts import DEFAULT_ALPHABET

try:
    from randprompt_ad import _fastgen
except ImportError:  # pragma: no cover - depends on the build
    _fastgen = None


def time_backend(fn, seed: int, count: int, repeats: int) -> tuple[float, list[str]]:
    """Best-of-N wall time in seconds plus the generated words."""
    best = float("inf")
    words: list[str] = []
    for _ in range(repeats):
        started = time.perf_counter()
        words = fn(seed, count, 5, 10, DEFAULT_ALPHABET)
        best = min(best, time.perf_counter() - started)
    return best, words


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--counts", default="1000,10000,100000")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    counts = [int(part) for part in args.counts.split(",") if part.strip()]

    print(f"{'words':>10} {'pure (s)':>12} {'fast (s)':>12} {'speedup':>9}")
    for count in counts:
        pure_time, pure_words = time_backend(
            _pygen.generate_words, args.seed, count, args.repeats
        )
        if _fastgen is None:
            print(f"{count:>10} {pure_time:>12.4f} {'not built':>12} {'-':>9}")
            continue
        fast_time, fast_words = time_backend(
            _fastgen.generate_words, args.seed, count, args.repeats
        )
        if fast_words != pure_words:
            raise SystemExit(f"backend outputs diverge at count={count}")
        print(
            f"{count:>10} {pure_time:>12.4f} {fast_time:>12.4f} "
            f"{pure_time / fast_time:>8.1f}x"
        )
    if _fastgen is None:
        print("note: compiled backend unavailable; install with the C extension built")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
