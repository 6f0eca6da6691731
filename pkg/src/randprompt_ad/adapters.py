"""Manifest adapters for standard dataset directory layouts.

Two layouts are supported:

* ``mvtec``: ``root/<category>/test/<defect>/*.png`` with ``good``
  meaning normal; references come from ``root/<category>/train/good/``.
* ``visa``: ``root/<category>/Data/Images/{Normal,Anomaly}/*.jpg``;
  references (when requested) are the first normals per category and
  are excluded from the evaluation entries.

Paths are stored relative to ``root`` with forward slashes; directory
listings are sorted so manifests are deterministic.
"""

from __future__ import annotations

import os

from .errors import DataError
from .manifest import DatasetManifest, ManifestEntry

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


def _is_image(name: str) -> bool:
    return name.lower().endswith(IMAGE_EXTENSIONS)


def _list_images(directory: str) -> list[str]:
    if not os.path.isdir(directory):
        return []
    return sorted(
        entry.name
        for entry in os.scandir(directory)
        if entry.is_file() and _is_image(entry.name)
    )


def _join(*parts: str) -> str:
    return "/".join(parts)


def scan_mvtec(root, max_refs: int | None = None) -> DatasetManifest:
    """Manifest from an MVTec-AD style tree (category/test/<defect>)."""
    root = os.fspath(root)
    categories = sorted(
        entry.name
        for entry in os.scandir(root)
        if entry.is_dir() and os.path.isdir(os.path.join(entry.path, "test"))
    )
    if not categories:
        raise DataError(f"{root}: no '<category>/test' directories found")
    entries: list[ManifestEntry] = []
    refs: dict[str, list[str]] = {}
    for category in categories:
        test_dir = os.path.join(root, category, "test")
        for defect in sorted(
            e.name for e in os.scandir(test_dir) if e.is_dir()
        ):
            label = 0 if defect == "good" else 1
            for name in _list_images(os.path.join(test_dir, defect)):
                entries.append(
                    ManifestEntry(
                        _join(category, "test", defect, name),
                        label,
                        category,
                    )
                )
        ref_names = _list_images(os.path.join(root, category, "train", "good"))
        if max_refs is not None:
            ref_names = ref_names[:max_refs]
        if ref_names:
            refs[category] = [
                _join(category, "train", "good", name) for name in ref_names
            ]
    return DatasetManifest(entries=tuple(entries), refs=refs)


def scan_visa(root, max_refs: int | None = None) -> DatasetManifest:
    """Manifest from a VisA style tree (category/Data/Images/{Normal,Anomaly})."""
    root = os.fspath(root)
    categories = sorted(
        entry.name
        for entry in os.scandir(root)
        if entry.is_dir()
        and os.path.isdir(os.path.join(entry.path, "Data", "Images"))
    )
    if not categories:
        raise DataError(f"{root}: no '<category>/Data/Images' directories found")
    entries: list[ManifestEntry] = []
    refs: dict[str, list[str]] = {}
    for category in categories:
        images_dir = os.path.join(root, category, "Data", "Images")
        normals = _list_images(os.path.join(images_dir, "Normal"))
        anomalies = _list_images(os.path.join(images_dir, "Anomaly"))
        n_refs = 0
        if max_refs is not None and max_refs > 0:
            n_refs = min(max_refs, len(normals))
            if n_refs:
                refs[category] = [
                    _join(category, "Data", "Images", "Normal", name)
                    for name in normals[:n_refs]
                ]
        for name in normals[n_refs:]:
            entries.append(
                ManifestEntry(
                    _join(category, "Data", "Images", "Normal", name),
                    0,
                    category,
                )
            )
        for name in anomalies:
            entries.append(
                ManifestEntry(
                    _join(category, "Data", "Images", "Anomaly", name),
                    1,
                    category,
                )
            )
    return DatasetManifest(entries=tuple(entries), refs=refs)


LAYOUT_SCANNERS = {"mvtec": scan_mvtec, "visa": scan_visa}
