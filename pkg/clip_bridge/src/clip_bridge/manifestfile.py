"""Reader for dataset manifest JSON documents.

The document is ``{"entries": [{"path", "label", "category"}, ...],
"refs": {category: [path, ...]}}``; extraction only needs the entries,
whose order defines the embedding row order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import FormatError


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int
    category: str


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]

    @property
    def paths(self) -> list[str]:
        return [entry.path for entry in self.entries]


def read_manifest(path) -> Manifest:
    """Parse a manifest, validating entry shape and path uniqueness."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "entries" not in doc:
        raise FormatError(f"{path}: manifest must be an object with 'entries'")
    raw_entries = doc["entries"]
    if not isinstance(raw_entries, list) or not raw_entries:
        raise FormatError(f"{path}: 'entries' must be a non-empty list")
    entries = []
    for index, raw in enumerate(raw_entries):
        try:
            entry = ManifestEntry(
                path=str(raw["path"]), label=int(raw["label"]), category=str(raw["category"])
            )
        except (TypeError, KeyError, ValueError) as exc:
            raise FormatError(f"{path}: bad entry {index}: {exc}") from exc
        if entry.label not in (0, 1):
            raise FormatError(f"{path}: entry {index} label must be 0 or 1")
        if not entry.path or not entry.category:
            raise FormatError(f"{path}: entry {index} has an empty path or category")
        entries.append(entry)
    paths = [entry.path for entry in entries]
    if len(set(paths)) != len(paths):
        duplicate = next(p for p in paths if paths.count(p) > 1)
        raise FormatError(f"{path}: duplicate entry path {duplicate!r}")
    return Manifest(entries=tuple(entries))
