"""End-to-end experiment orchestration.

For every seed the harness trains the detector (when ``s_fnn`` is
requested), computes the configured score components, fuses them, and
evaluates per category; seed statistics aggregate the runs. Sweeps
repeat this per value with ``{value}`` placeholders substituted into
the embedding paths. All inputs are files produced by an embedding
extractor (or the synthetic fixture); the harness itself never touches
images.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .embeddings import EmbeddingMatrix, PairedEmbeddingSet, read_embeddings
from .errors import ConfigError, DataError
from .manifest import DatasetManifest, load_manifest
from .metrics import METRIC_NAMES, EvalReport, evaluate_scores, seed_statistics
from .mlp import MlpArchitecture, TrainConfig, score_fnn, train
from .rng import SplitMix64
from .scoring import (
    DEFAULT_TEMPERATURE,
    ScoreVector,
    fuse,
    score_prompt_guided,
    score_reference,
)

SETUPS = ("zero_shot_unknown", "zero_shot_known", "few_shot")
COMPONENTS = ("s_pr", "s_fnn", "s_img")


@dataclass(frozen=True)
class ExperimentPaths:
    """File locations consumed by a run; unused entries may stay None."""

    manifest: str
    images: str
    train_normals: str | None = None
    train_anomalies: str | None = None
    guide_normals: str | None = None
    guide_anomalies: str | None = None
    refs: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    paths: ExperimentPaths
    setup: str = "zero_shot_unknown"
    components: tuple[str, ...] = ("s_pr", "s_fnn")
    seeds: tuple[int, ...] = tuple(range(10))
    k: int = 0
    temperature: float = DEFAULT_TEMPERATURE
    train: TrainConfig = field(default_factory=TrainConfig)
    hidden_dims: tuple[int, int, int] = (512, 256, 128)
    dropout_rate: float = 0.2
    bn_epsilon: float = 1e-5
    bn_momentum: float = 0.1
    multi_crop: bool = False  # provenance only; crops happen in the extractor
    word_pair: str | None = None  # provenance
    n_pairs: int | None = None  # provenance

    def __post_init__(self) -> None:
        if self.setup not in SETUPS:
            raise ConfigError(f"setup must be one of {SETUPS}, got {self.setup!r}")
        if not self.components:
            raise ConfigError("at least one score component is required")
        unknown = [c for c in self.components if c not in COMPONENTS]
        if unknown:
            raise ConfigError(f"unknown score components {unknown}")
        if len(set(self.components)) != len(self.components):
            raise ConfigError(f"duplicate score components {self.components}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be unique")
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")
        if "s_img" in self.components and self.setup != "few_shot":
            raise ConfigError("s_img requires the few_shot setup")
        if self.setup == "few_shot":
            if self.k < 1:
                raise ConfigError("few_shot requires k >= 1")
            if "s_img" not in self.components:
                raise ConfigError("few_shot requires the s_img component")
        elif self.k != 0:
            raise ConfigError(f"k must be 0 outside few_shot, got {self.k}")

    def meta(self) -> dict:
        return {
            "setup": self.setup,
            "components": list(self.components),
            "seeds": list(self.seeds),
            "k": self.k,
            "temperature": self.temperature,
            "multi_crop": self.multi_crop,
            "word_pair": self.word_pair,
            "n_pairs": self.n_pairs,
        }


@dataclass(frozen=True)
class SweepSpec:
    variable: str  # "n_pairs" or "word_pair"
    values: tuple

    def __post_init__(self) -> None:
        if self.variable not in ("n_pairs", "word_pair"):
            raise ConfigError(f"unknown sweep variable {self.variable!r}")
        if not self.values:
            raise ConfigError("sweep values must be non-empty")


def _per_category_stitch(
    manifest: DatasetManifest, images: EmbeddingMatrix, score_one
) -> np.ndarray:
    """Assemble a full score array from per-category scoring of row subsets."""
    categories = np.asarray(manifest.entry_categories)
    values = np.empty(images.count, dtype=np.float64)
    for index, category in enumerate(manifest.categories):
        mask = categories == category
        subset = EmbeddingMatrix(images.data[mask], images.kind)
        values[mask] = score_one(index, category, subset)
    return values


def _unit(vector: np.ndarray) -> np.ndarray:
    return vector / np.linalg.norm(vector)


def prompt_guided_scores(
    guide_normals: EmbeddingMatrix,
    guide_anomalies: EmbeddingMatrix,
    images: EmbeddingMatrix,
    manifest: DatasetManifest,
    temperature: float = DEFAULT_TEMPERATURE,
) -> ScoreVector:
    """Prompt-guided scores for a whole manifest.

    Single-row guides (unknown-object prompts) apply to every image;
    guides with one row per sorted category apply per category.
    """
    n_categories = len(manifest.categories)
    for name, guide in (("normals", guide_normals), ("anomalies", guide_anomalies)):
        if guide.count not in (1, n_categories):
            raise DataError(
                f"guide {name}: {guide.count} rows; expected 1 (unknown object) "
                f"or {n_categories} (one per category)"
            )
        if guide.dim != images.dim:
            raise DataError(f"guide {name} dim {guide.dim} != image dim {images.dim}")
    if guide_normals.count != guide_anomalies.count:
        raise DataError(
            f"guide row mismatch: {guide_normals.count} normals vs "
            f"{guide_anomalies.count} anomalies"
        )
    ids = tuple(manifest.paths)
    if guide_normals.count == 1:
        return score_prompt_guided(
            _unit(guide_normals.data[0].astype(np.float64)),
            _unit(guide_anomalies.data[0].astype(np.float64)),
            images,
            temperature,
            sample_ids=ids,
        )

    def score_one(index: int, category: str, subset: EmbeddingMatrix) -> np.ndarray:
        return score_prompt_guided(
            _unit(guide_normals.data[index].astype(np.float64)),
            _unit(guide_anomalies.data[index].astype(np.float64)),
            subset,
            temperature,
        ).values

    return ScoreVector(_per_category_stitch(manifest, images, score_one), "s_pr", ids)


def select_reference_rows(
    manifest: DatasetManifest, k: int, seed: int
) -> dict[str, np.ndarray]:
    """Per-seed reference sampling.

    Categories are visited in sorted order sharing one seeded stream;
    each category's listed reference indices are shuffled, the first k
    taken, and mapped onto rows of the reference embedding file (whose
    row order is the manifest's flattened refs).
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    rows: dict[str, np.ndarray] = {}
    rng = SplitMix64(seed)
    offset = 0
    for category in sorted(manifest.refs):
        listed = manifest.refs[category]
        if len(listed) < k:
            raise ConfigError(
                f"category {category!r} has {len(listed)} references, needs k={k}"
            )
        indices = list(range(len(listed)))
        rng.shuffle(indices)
        rows[category] = offset + np.asarray(sorted(indices[:k]), dtype=np.int64)
        offset += len(listed)
    return rows


def reference_scores(
    refs: EmbeddingMatrix,
    images: EmbeddingMatrix,
    manifest: DatasetManifest,
    k: int,
    seed: int,
) -> ScoreVector:
    """Few-shot reference scores with per-seed sampled references."""
    flat = manifest.flat_refs()
    if refs.count != len(flat):
        raise DataError(
            f"reference file has {refs.count} rows for {len(flat)} listed references"
        )
    if refs.dim != images.dim:
        raise DataError(f"refs dim {refs.dim} != image dim {images.dim}")
    missing = [c for c in manifest.categories if c not in manifest.refs]
    if missing:
        raise ConfigError(f"categories without references: {missing}")
    selected = select_reference_rows(manifest, k, seed)

    def score_one(index: int, category: str, subset: EmbeddingMatrix) -> np.ndarray:
        chosen = EmbeddingMatrix(refs.data[selected[category]], refs.kind)
        return score_reference(subset, chosen).values

    return ScoreVector(
        _per_category_stitch(manifest, images, score_one), "s_img", tuple(manifest.paths)
    )


@dataclass
class _RunData:
    manifest: DatasetManifest
    images: EmbeddingMatrix
    guides: tuple[EmbeddingMatrix, EmbeddingMatrix] | None
    pairs: PairedEmbeddingSet | None
    refs: EmbeddingMatrix | None


def _load_inputs(cfg: ExperimentConfig) -> _RunData:
    paths = cfg.paths
    required: list[tuple[str, str | None]] = [
        ("manifest", paths.manifest),
        ("images", paths.images),
    ]
    if "s_pr" in cfg.components:
        required += [
            ("guide_normals", paths.guide_normals),
            ("guide_anomalies", paths.guide_anomalies),
        ]
    if "s_fnn" in cfg.components:
        required += [
            ("train_normals", paths.train_normals),
            ("train_anomalies", paths.train_anomalies),
        ]
    if "s_img" in cfg.components:
        required += [("refs", paths.refs)]
    unset = [name for name, p in required if p is None]
    if unset:
        raise ConfigError(f"paths not configured for this run: {', '.join(unset)}")
    missing = [p for _, p in required if p is not None and not os.path.exists(p)]
    if missing:
        raise FileNotFoundError(f"missing input files: {', '.join(missing)}")

    manifest = load_manifest(paths.manifest)
    images = read_embeddings(paths.images)
    if images.count != len(manifest.entries):
        raise DataError(
            f"{paths.images}: {images.count} rows for "
            f"{len(manifest.entries)} manifest entries"
        )

    guides = None
    if "s_pr" in cfg.components:
        guide_n = read_embeddings(paths.guide_normals)
        guide_a = read_embeddings(paths.guide_anomalies)
        expected = 1 if cfg.setup == "zero_shot_unknown" else len(manifest.categories)
        for name, guide in (("normals", guide_n), ("anomalies", guide_a)):
            if guide.count != expected:
                raise DataError(
                    f"guide {name}: {guide.count} rows, expected {expected} "
                    f"for setup {cfg.setup}"
                )
        guides = (guide_n, guide_a)

    pairs = None
    if "s_fnn" in cfg.components:
        pairs = PairedEmbeddingSet.load(paths.train_normals, paths.train_anomalies)
        if pairs.dim != images.dim:
            raise DataError(f"training dim {pairs.dim} != image dim {images.dim}")

    refs = None
    if "s_img" in cfg.components:
        refs = read_embeddings(paths.refs)
        for category in manifest.categories:
            if len(manifest.refs.get(category, ())) < cfg.k:
                raise ConfigError(
                    f"category {category!r} has "
                    f"{len(manifest.refs.get(category, ()))} references, "
                    f"needs k={cfg.k}"
                )
    return _RunData(manifest, images, guides, pairs, refs)


def _score_s_fnn(cfg: ExperimentConfig, data: _RunData, seed: int) -> ScoreVector:
    arch = MlpArchitecture(
        input_dim=data.pairs.dim,
        hidden_dims=cfg.hidden_dims,
        dropout_rate=cfg.dropout_rate,
        bn_epsilon=cfg.bn_epsilon,
        bn_momentum=cfg.bn_momentum,
    )
    train_cfg = replace(cfg.train, seed=seed)
    result = train(data.pairs, arch, train_cfg)
    return score_fnn(
        result.params,
        data.images,
        normalize=train_cfg.normalize_inputs,
        sample_ids=tuple(data.manifest.paths),
    )


def score_components(
    cfg: ExperimentConfig, data: _RunData, seed: int
) -> list[ScoreVector]:
    """Configured components for one seed, in canonical fusion order."""
    vectors = []
    if "s_pr" in cfg.components:
        vectors.append(
            prompt_guided_scores(
                data.guides[0],
                data.guides[1],
                data.images,
                data.manifest,
                cfg.temperature,
            )
        )
    if "s_fnn" in cfg.components:
        vectors.append(_score_s_fnn(cfg, data, seed))
    if "s_img" in cfg.components:
        vectors.append(
            reference_scores(data.refs, data.images, data.manifest, cfg.k, seed)
        )
    return vectors


def _run(cfg: ExperimentConfig) -> EvalReport:
    data = _load_inputs(cfg)
    runs = []
    for seed in cfg.seeds:
        fused = fuse(score_components(cfg, data, seed))
        runs.append(
            evaluate_scores(
                fused,
                data.manifest.labels,
                data.manifest.entry_categories,
                meta={"seed": seed},
            )
        )
    return seed_statistics(runs, meta=cfg.meta())


def run_zero_shot(cfg: ExperimentConfig) -> EvalReport:
    """Multi-seed zero-shot experiment (unknown- or known-object)."""
    if cfg.setup not in ("zero_shot_unknown", "zero_shot_known"):
        raise ConfigError(f"run_zero_shot got setup {cfg.setup!r}")
    return _run(cfg)


def run_few_shot(cfg: ExperimentConfig) -> EvalReport:
    """Multi-seed few-shot experiment with per-seed reference sampling."""
    if cfg.setup != "few_shot":
        raise ConfigError(f"run_few_shot got setup {cfg.setup!r}")
    return _run(cfg)


def value_slug(value) -> str:
    """Filesystem-safe token substituted for ``{value}`` in sweep paths."""
    return str(value).replace("/", "__").replace(" ", "-")


def _substitute(paths: ExperimentPaths, slug: str) -> ExperimentPaths:
    def sub(p: str | None) -> str | None:
        return None if p is None else p.replace("{value}", slug)

    return ExperimentPaths(
        manifest=sub(paths.manifest),
        images=sub(paths.images),
        train_normals=sub(paths.train_normals),
        train_anomalies=sub(paths.train_anomalies),
        guide_normals=sub(paths.guide_normals),
        guide_anomalies=sub(paths.guide_anomalies),
        refs=sub(paths.refs),
    )


def run_sweep(
    cfg: ExperimentConfig, spec: SweepSpec
) -> list[tuple[object, EvalReport]]:
    """One report per sweep value; paths may carry a ``{value}`` placeholder."""
    results = []
    for value in spec.values:
        run_cfg = replace(
            cfg,
            paths=_substitute(cfg.paths, value_slug(value)),
            n_pairs=int(value) if spec.variable == "n_pairs" else cfg.n_pairs,
            word_pair=str(value) if spec.variable == "word_pair" else cfg.word_pair,
        )
        results.append((value, _run(run_cfg)))
    return results


def sweep_to_csv(results: list[tuple[object, EvalReport]], variable: str) -> str:
    """Wide CSV (one row per value) with aggregate mean/std per metric."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = ["variable", "value"]
    for name in METRIC_NAMES:
        header += [f"{name}_mean", f"{name}_std"]
    writer.writerow(header)
    for value, report in results:
        row = [variable, str(value)]
        for name in METRIC_NAMES:
            stats = report.aggregate[name]
            row += [repr(stats.mean), repr(stats.std)]
        writer.writerow(row)
    return buffer.getvalue()
