"""Paired normal/anomalous prompt generation with random-word augmentation.

Each prompt pair fills the two templates

    ``[w0] a [w1] photo [w2] of [w3] <normal-word> [w4]``
    ``[w5] a [w6] photo [w7] of [w8] <anomaly-word> [w9]``

with ten independently generated random words, drawn in slot order
``w0..w9`` from a single seeded stream, pairs in ascending index order.
Plain (un-augmented) guide prompts use ``a photo of <word> <object>``.

Prompt sets serialize to a line-oriented UTF-8 file: a header
``#randprompt v1 seed=<u64> n=<count>`` followed by one prompt per
line, each normal line immediately followed by its paired anomaly line.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

from . import _pygen
from .errors import ConfigError, CorruptionError, FormatError
from .rng import SplitMix64

try:  # compiled kernel; optional at runtime
    from . import _fastgen
except ImportError:  # pragma: no cover - build-dependent
    _fastgen = None

#: Lowercase English letters plus digits. CLIP-style tokenizers lowercase
#: their input, so uppercase variants add no diversity after tokenization.
DEFAULT_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"

DEFAULT_WORD_PAIR: "WordPair"

#: Normal-word choices enumerated by the word-pair sweep grid.
NORMAL_WORD_CHOICES = ("an", "a normal", "a good", "a flawless")
#: Anomaly-word choices enumerated by the word-pair sweep grid.
ANOMALY_WORD_CHOICES = ("a damaged", "a broken", "a defective", "an anomalous")

#: Literal anchor tokens shared by both augmented templates, in order.
TEMPLATE_ANCHORS = ("a", "photo", "of")

_HEADER_RE = re.compile(r"^#randprompt v1 seed=(\d+) n=(\d+)$")
_SLOTS_PER_PROMPT = 5
_WORDS_PER_PAIR = 2 * _SLOTS_PER_PROMPT


@dataclass(frozen=True)
class RandomWordConfig:
    """Configuration of the random-word generator."""

    l_min: int = 5
    l_max: int = 10
    alphabet: str = DEFAULT_ALPHABET
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.l_min <= self.l_max:
            raise ConfigError(
                f"word lengths must satisfy 1 <= l_min <= l_max, "
                f"got l_min={self.l_min}, l_max={self.l_max}"
            )
        if not self.alphabet:
            raise ConfigError("alphabet must be non-empty")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ConfigError("alphabet must be duplicate-free")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in 64 bits, got {self.seed}")


@dataclass(frozen=True)
class WordPair:
    """The normal/anomaly word pair inserted into the templates."""

    normal_word: str
    anomaly_word: str

    def __post_init__(self) -> None:
        for name, word in (
            ("normal_word", self.normal_word),
            ("anomaly_word", self.anomaly_word),
        ):
            if not word:
                raise ConfigError(f"{name} must be non-empty")
            if word != word.strip():
                raise ConfigError(
                    f"{name} must not have leading/trailing whitespace: {word!r}"
                )


DEFAULT_WORD_PAIR = WordPair("a", "a damaged")


@dataclass(frozen=True)
class PromptPair:
    """One completed normal/anomalous prompt pair."""

    normal_prompt: str
    anomaly_prompt: str
    pair_index: int = 0


def word_pair_grid() -> list[WordPair]:
    """All 16 sweep-grid combinations, normal-word-major order."""
    return [
        WordPair(n, a) for n in NORMAL_WORD_CHOICES for a in ANOMALY_WORD_CHOICES
    ]


def parse_word_pair(text: str) -> WordPair:
    """Parse ``"normal/anomaly"`` (e.g. ``"an/a damaged"``) or ``"default"``."""
    if text == "default":
        return DEFAULT_WORD_PAIR
    parts = text.split("/")
    if len(parts) != 2:
        raise ConfigError(
            f"word pair must be 'normal/anomaly' or 'default', got {text!r}"
        )
    try:
        return WordPair(parts[0].strip(), parts[1].strip())
    except ConfigError as exc:
        raise ConfigError(f"bad word pair {text!r}: {exc}") from exc


def format_word_pair(pair: WordPair) -> str:
    """Inverse of :func:`parse_word_pair` for CLI/CSV round trips."""
    return f"{pair.normal_word}/{pair.anomaly_word}"


def generate_random_word(cfg: RandomWordConfig, rng: SplitMix64) -> str:
    """Draw one random word: a length from ``[l_min, l_max]``, then each
    character independently and uniformly from the alphabet."""
    length = cfg.l_min + rng.next_below(cfg.l_max - cfg.l_min + 1)
    n_alpha = len(cfg.alphabet)
    return "".join(cfg.alphabet[rng.next_below(n_alpha)] for _ in range(length))


def _fill_one(slots: tuple[str, ...], state_word: str) -> str:
    w0, w1, w2, w3, w4 = slots
    return f"{w0} a {w1} photo {w2} of {w3} {state_word} {w4}"


def fill_templates(
    words: WordPair, random_words: list[str] | tuple[str, ...], pair_index: int = 0
) -> PromptPair:
    """Fill both templates with ten random words (five per prompt)."""
    if len(random_words) != _WORDS_PER_PAIR:
        raise ValueError(
            f"expected {_WORDS_PER_PAIR} random words, got {len(random_words)}"
        )
    for word in random_words:
        if not word or word.split() != [word]:
            raise ValueError(f"random words must be non-empty and space-free: {word!r}")
    slots = tuple(random_words)
    return PromptPair(
        normal_prompt=_fill_one(slots[:_SLOTS_PER_PROMPT], words.normal_word),
        anomaly_prompt=_fill_one(slots[_SLOTS_PER_PROMPT:], words.anomaly_word),
        pair_index=pair_index,
    )


def generation_backend_name(alphabet: str = DEFAULT_ALPHABET) -> str:
    """Which backend :func:`generate_prompt_set` would use: 'fast' or 'pure'."""
    return "fast" if _select_backend(alphabet) is _fastgen else "pure"


def _select_backend(alphabet: str):
    if (
        _fastgen is not None
        and os.environ.get("RANDPROMPT_AD_PURE") != "1"
        and alphabet.isascii()
    ):
        return _fastgen
    return _pygen


def generate_prompt_set(
    cfg: RandomWordConfig, words: WordPair, n_pairs: int
) -> list[PromptPair]:
    """Generate ``n_pairs`` prompt pairs deterministically from ``cfg.seed``."""
    if n_pairs <= 0:
        raise ValueError(f"n_pairs must be positive, got {n_pairs}")
    backend = _select_backend(cfg.alphabet)
    flat = backend.generate_words(
        cfg.seed, n_pairs * _WORDS_PER_PAIR, cfg.l_min, cfg.l_max, cfg.alphabet
    )
    return [
        fill_templates(
            words, flat[i * _WORDS_PER_PAIR : (i + 1) * _WORDS_PER_PAIR], pair_index=i
        )
        for i in range(n_pairs)
    ]


def guide_prompt_pair(
    words: WordPair, object_word: str = "object", pair_index: int = 0
) -> PromptPair:
    """Plain guide prompts, ``a photo of <word> <object>``, no augmentation.

    ``object_word`` is the generic ``"object"`` when target categories are
    unknown, or the category name when they are known.
    """
    if not object_word or object_word != object_word.strip():
        raise ValueError(f"object word must be non-empty and trimmed: {object_word!r}")
    return PromptPair(
        normal_prompt=f"a photo of {words.normal_word} {object_word}",
        anomaly_prompt=f"a photo of {words.anomaly_word} {object_word}",
        pair_index=pair_index,
    )


def guide_prompt_set(words: WordPair, object_words: list[str]) -> list[PromptPair]:
    """One plain guide pair per object word, in the given order."""
    if not object_words:
        raise ValueError("object_words must be non-empty")
    return [
        guide_prompt_pair(words, object_word, pair_index=i)
        for i, object_word in enumerate(object_words)
    ]


def write_prompt_file(path, pairs: list[PromptPair], seed: int = 0) -> None:
    """Write a prompt set in the line-oriented interchange format."""
    lines = [f"#randprompt v1 seed={seed} n={len(pairs)}"]
    for pair in pairs:
        lines.append(pair.normal_prompt)
        lines.append(pair.anomaly_prompt)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_prompt_file(path) -> tuple[int, list[PromptPair]]:
    """Read a prompt file; returns ``(seed, pairs)`` with indices restored."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty prompt file")
    match = _HEADER_RE.match(lines[0])
    if match is None:
        raise FormatError(f"{path}: bad header line {lines[0]!r}")
    seed, count = int(match.group(1)), int(match.group(2))
    body = lines[1:]
    if len(body) != 2 * count:
        raise CorruptionError(
            f"{path}: header declares {count} pairs ({2 * count} lines), "
            f"found {len(body)} lines"
        )
    if any(not line for line in body):
        raise FormatError(f"{path}: blank prompt line")
    pairs = [
        PromptPair(body[2 * i], body[2 * i + 1], pair_index=i) for i in range(count)
    ]
    return seed, pairs
