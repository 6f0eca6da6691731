"""Dataset manifests: image paths, labels, categories, few-shot references.

A manifest is a JSON document::

    {
      "entries": [{"path": "...", "label": 0, "category": "bottle"}, ...],
      "refs": {"bottle": ["...", ...]}
    }

Entry order defines row order in the companion image EMB1 file. The
optional ``refs`` map lists reference-normal image paths per category;
its flattened order (categories sorted, paths in listed order) defines
row order in a reference EMB1 file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ManifestError


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int
    category: str


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    refs: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(
            self, "refs", {c: tuple(paths) for c, paths in self.refs.items()}
        )
        if not self.entries:
            raise ManifestError("manifest has no entries")
        seen: set[str] = set()
        for i, entry in enumerate(self.entries):
            if entry.label not in (0, 1):
                raise ManifestError(
                    f"entry {i} ({entry.path!r}): label must be 0 or 1, got {entry.label}"
                )
            if not entry.category:
                raise ManifestError(f"entry {i} ({entry.path!r}): empty category")
            if not entry.path:
                raise ManifestError(f"entry {i}: empty path")
            if entry.path in seen:
                raise ManifestError(f"duplicate path {entry.path!r}")
            seen.add(entry.path)
        for category, paths in self.refs.items():
            if not category:
                raise ManifestError("refs contain an empty category name")
            if len(set(paths)) != len(paths):
                raise ManifestError(f"refs for {category!r} contain duplicate paths")

    @property
    def categories(self) -> list[str]:
        """Sorted unique categories over the entries."""
        return sorted({entry.category for entry in self.entries})

    @property
    def labels(self) -> np.ndarray:
        return np.array([entry.label for entry in self.entries], dtype=np.int64)

    @property
    def paths(self) -> list[str]:
        return [entry.path for entry in self.entries]

    @property
    def entry_categories(self) -> list[str]:
        return [entry.category for entry in self.entries]

    def flat_refs(self) -> list[tuple[str, str]]:
        """``(category, path)`` pairs in reference-row order: categories
        sorted, paths in listed order."""
        return [
            (category, path)
            for category in sorted(self.refs)
            for path in self.refs[category]
        ]


def load_manifest(path) -> DatasetManifest:
    """Load and validate a manifest JSON document."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "entries" not in doc:
        raise ManifestError(f"{path}: expected an object with an 'entries' list")
    entries = []
    for i, item in enumerate(doc["entries"]):
        try:
            entries.append(
                ManifestEntry(
                    path=str(item["path"]),
                    label=int(item["label"]),
                    category=str(item["category"]),
                )
            )
        except (TypeError, KeyError, ValueError) as exc:
            raise ManifestError(f"{path}: entry {i} malformed: {exc}") from exc
    refs_doc = doc.get("refs", {})
    if not isinstance(refs_doc, dict):
        raise ManifestError(f"{path}: 'refs' must be an object")
    refs = {
        str(category): [str(p) for p in paths] for category, paths in refs_doc.items()
    }
    try:
        return DatasetManifest(entries=tuple(entries), refs=refs)
    except ManifestError as exc:
        raise ManifestError(f"{path}: {exc}") from exc


def save_manifest(manifest: DatasetManifest, path) -> None:
    """Write a manifest as deterministic (sorted-key) JSON."""
    doc = {
        "entries": [
            {"path": e.path, "label": e.label, "category": e.category}
            for e in manifest.entries
        ],
    }
    if manifest.refs:
        doc["refs"] = {c: list(paths) for c, paths in sorted(manifest.refs.items())}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def refs_as_manifest(manifest: DatasetManifest) -> DatasetManifest:
    """A manifest whose entries are the flattened reference images
    (all labeled normal), suitable for driving an embedding extractor."""
    flat = manifest.flat_refs()
    if not flat:
        raise ManifestError("manifest has no refs")
    return DatasetManifest(
        entries=tuple(
            ManifestEntry(path=path, label=0, category=category)
            for category, path in flat
        )
    )
