"""Reader for the line-oriented paired prompt format.

Layout: a header ``#randprompt v1 seed=<int> n=<int>`` followed by
exactly ``2 n`` non-empty lines alternating normal/anomaly prompt, so
pair ``i`` occupies lines ``2i+2`` and ``2i+3`` (1-based, header first).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import FormatError

_HEADER_RE = re.compile(r"^#randprompt v1 seed=(\d+) n=(\d+)$")


@dataclass(frozen=True)
class PromptSet:
    """Paired prompts in file order; ``normals[i]``/``anomalies[i]`` is pair i."""

    seed: int
    normals: tuple[str, ...]
    anomalies: tuple[str, ...]

    @property
    def count(self) -> int:
        return len(self.normals)


def read_prompt_file(path) -> PromptSet:
    """Parse and validate a prompt file."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty prompt file")
    match = _HEADER_RE.match(lines[0])
    if match is None:
        raise FormatError(f"{path}: bad header {lines[0]!r}")
    seed, n = int(match.group(1)), int(match.group(2))
    body = lines[1:]
    if len(body) != 2 * n:
        raise FormatError(
            f"{path}: header declares {n} pairs ({2 * n} lines), found {len(body)}"
        )
    for index, line in enumerate(body):
        if not line.strip():
            raise FormatError(f"{path}: blank prompt at line {index + 2}")
    return PromptSet(seed=seed, normals=tuple(body[0::2]), anomalies=tuple(body[1::2]))
