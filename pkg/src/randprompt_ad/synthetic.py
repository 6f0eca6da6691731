"""Deterministic Gaussian fixtures for end-to-end tests and demos.

The fixture mimics the real pipeline's file layout without any encoder:
"text" training pairs and "image" test samples are drawn from two
isotropic Gaussian clusters whose means sit ``margin * sigma`` apart,
orthogonal to a common offset of length ``radius``. The offset keeps
the separation direction intact under row normalization (the angular
gap stays ~``margin * sigma / radius`` against angular noise
``sigma / radius``), so normalized and raw variants are both separable.

Guide vectors are the exact (unit-normalized) cluster means. All draws
come from one seeded stream in a fixed, documented order: training
normals, training anomalies, then per category test normals, test
anomalies, and reference normals.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingMatrix, PairedEmbeddingSet, write_embeddings
from .manifest import DatasetManifest, ManifestEntry, save_manifest
from .rng import SplitMix64


def normal_array(rng: SplitMix64, shape: tuple[int, ...]) -> np.ndarray:
    """Standard-normal draws via Box-Muller on the seeded stream."""
    count = int(np.prod(shape)) if shape else 1
    half = (count + 1) // 2
    u1 = 1.0 - rng.double_array(half)  # (0, 1]: keeps log finite
    u2 = rng.double_array(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    samples = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
    return samples[:count].reshape(shape)


@dataclass(frozen=True)
class SyntheticFixture:
    train: PairedEmbeddingSet
    images: EmbeddingMatrix
    manifest: DatasetManifest
    refs: EmbeddingMatrix
    guide_normal: np.ndarray
    guide_anomaly: np.ndarray


def make_fixture(
    dim: int = 64,
    n_pairs: int = 2000,
    n_test: int = 500,
    n_refs: int = 4,
    seed: int = 0,
    margin: float = 4.0,
    sigma: float = 1.0,
    radius: float = 10.0,
    categories: tuple[str, ...] = ("synthetic",),
) -> SyntheticFixture:
    """Build a fully in-memory fixture; see the module docstring for geometry."""
    if dim < 2:
        raise ValueError("fixture needs dim >= 2 for an orthogonal margin")
    if n_pairs < 1 or n_test < 1 or n_refs < 1:
        raise ValueError("n_pairs, n_test and n_refs must all be >= 1")
    rng = SplitMix64(seed)
    mean_normal = np.zeros(dim)
    mean_normal[0] = radius
    mean_anomaly = mean_normal.copy()
    mean_anomaly[1] = margin * sigma

    def cluster(center: np.ndarray, count: int) -> np.ndarray:
        return center + sigma * normal_array(rng, (count, dim))

    train = PairedEmbeddingSet(
        EmbeddingMatrix(cluster(mean_normal, n_pairs), "text"),
        EmbeddingMatrix(cluster(mean_anomaly, n_pairs), "text"),
    )

    entries: list[ManifestEntry] = []
    image_rows: list[np.ndarray] = []
    refs_map: dict[str, list[str]] = {}
    ref_rows: list[np.ndarray] = []
    for category in categories:
        image_rows.append(cluster(mean_normal, n_test))
        entries.extend(
            ManifestEntry(f"{category}/good_{i:04d}.png", 0, category)
            for i in range(n_test)
        )
        image_rows.append(cluster(mean_anomaly, n_test))
        entries.extend(
            ManifestEntry(f"{category}/bad_{i:04d}.png", 1, category)
            for i in range(n_test)
        )
        ref_rows.append(cluster(mean_normal, n_refs))
        refs_map[category] = [f"{category}/ref_{i:04d}.png" for i in range(n_refs)]

    manifest = DatasetManifest(entries=tuple(entries), refs=refs_map)
    images = EmbeddingMatrix(np.concatenate(image_rows), "image")
    # Manifest iterates categories in given order; reference rows follow
    # flat_refs() order (categories sorted) to match the file contract.
    ref_by_category = dict(zip(categories, ref_rows))
    refs = EmbeddingMatrix(
        np.concatenate([ref_by_category[c] for c in sorted(categories)]), "image"
    )
    return SyntheticFixture(
        train=train,
        images=images,
        manifest=manifest,
        refs=refs,
        guide_normal=mean_normal / np.linalg.norm(mean_normal),
        guide_anomaly=mean_anomaly / np.linalg.norm(mean_anomaly),
    )


def write_fixture(fixture: SyntheticFixture, out_dir) -> dict[str, str]:
    """Write the fixture in the pipeline's on-disk layout; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "train_normals": os.path.join(out_dir, "train_normals.emb1"),
        "train_anomalies": os.path.join(out_dir, "train_anomalies.emb1"),
        "images": os.path.join(out_dir, "images.emb1"),
        "refs": os.path.join(out_dir, "refs.emb1"),
        "guide_normals": os.path.join(out_dir, "guide_normals.emb1"),
        "guide_anomalies": os.path.join(out_dir, "guide_anomalies.emb1"),
        "manifest": os.path.join(out_dir, "manifest.json"),
    }
    write_embeddings(fixture.train.normals, paths["train_normals"])
    write_embeddings(fixture.train.anomalies, paths["train_anomalies"])
    write_embeddings(fixture.images, paths["images"])
    write_embeddings(fixture.refs, paths["refs"])
    write_embeddings(
        EmbeddingMatrix(fixture.guide_normal[None, :], "text"),
        paths["guide_normals"],
    )
    write_embeddings(
        EmbeddingMatrix(fixture.guide_anomaly[None, :], "text"),
        paths["guide_anomalies"],
    )
    save_manifest(fixture.manifest, paths["manifest"])
    return paths
