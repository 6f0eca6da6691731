"""Anomaly scores: prompt-guided, reference-similarity, and fusion.

All scores are pure functions of their inputs. The prompt-guided score
is a two-way softmax over cosine similarities at temperature ``T``; the
reference score maps the best cosine against reference normals into
``[0, 1]``; fusion is an unweighted elementwise sum. Scores export to
CSV rows ``sample_id,category,label,score_kind,value``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingMatrix, unit_rows
from .errors import DataError, FormatError

SCORE_KINDS = ("s_pr", "s_fnn", "s_img", "sum")

#: Default softmax temperature for the prompt-guided score.
DEFAULT_TEMPERATURE = 0.01


@dataclass(frozen=True)
class ScoreVector:
    """Per-sample scores of one kind, aligned with sample identifiers."""

    values: np.ndarray
    kind: str
    sample_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError(f"scores must be 1-D, got shape {values.shape}")
        if self.kind not in SCORE_KINDS:
            raise ValueError(f"kind must be one of {SCORE_KINDS}, got {self.kind!r}")
        if len(self.sample_ids) != values.size:
            raise ValueError(
                f"{len(self.sample_ids)} sample ids for {values.size} scores"
            )
        if not np.isfinite(values).all():
            raise ValueError("scores must be finite")
        if self.kind != "sum" and values.size and (
            values.min() < 0.0 or values.max() > 1.0
        ):
            raise ValueError(f"{self.kind} scores must lie in [0, 1]")
        if self.kind == "sum" and values.size and values.min() < 0.0:
            raise ValueError("summed scores must be non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))

    def __len__(self) -> int:
        return self.values.size


def default_sample_ids(n: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(n))


def _as_unit_vector(vec, name: str) -> np.ndarray:
    v = np.asarray(vec, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > 1e-4:
        raise ValueError(f"{name} must be unit-norm within 1e-4, norm is {norm:.6f}")
    return v


def score_prompt_guided(
    e_normal_text,
    e_anomaly_text,
    images: EmbeddingMatrix,
    temperature: float = DEFAULT_TEMPERATURE,
    sample_ids: tuple[str, ...] | None = None,
) -> ScoreVector:
    """Two-way softmax over cosine similarities at ``temperature``.

    The returned value per image is the anomaly-class probability.
    Image rows are normalized internally; the text vectors must already
    be unit-norm. The softmax subtracts the per-sample maximum before
    exponentiation, so similarities of +/-1 at temperature 0.01 stay far
    from overflow.
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    e_n = _as_unit_vector(e_normal_text, "e_normal_text")
    e_a = _as_unit_vector(e_anomaly_text, "e_anomaly_text")
    if e_n.size != e_a.size or e_n.size != images.dim:
        raise ValueError(
            f"dimension mismatch: text {e_n.size}/{e_a.size}, images {images.dim}"
        )
    rows = unit_rows(images.data)
    z_n = (rows @ e_n) / temperature
    z_a = (rows @ e_a) / temperature
    top = np.maximum(z_n, z_a)
    exp_n = np.exp(z_n - top)
    exp_a = np.exp(z_a - top)
    values = exp_a / (exp_n + exp_a)
    ids = default_sample_ids(images.count) if sample_ids is None else sample_ids
    return ScoreVector(values, "s_pr", ids)


def score_reference(
    images: EmbeddingMatrix,
    refs: EmbeddingMatrix,
    sample_ids: tuple[str, ...] | None = None,
) -> ScoreVector:
    """``(1 - max cosine against any reference) / 2``, clamped to [0, 1]."""
    if refs.count < 1:
        raise ValueError("refs must contain at least one embedding")
    if refs.dim != images.dim:
        raise ValueError(f"dimension mismatch: images {images.dim}, refs {refs.dim}")
    image_rows = unit_rows(images.data)
    ref_rows = unit_rows(refs.data)
    best = (image_rows @ ref_rows.T).max(axis=1)
    values = np.clip((1.0 - best) / 2.0, 0.0, 1.0)
    ids = default_sample_ids(images.count) if sample_ids is None else sample_ids
    return ScoreVector(values, "s_img", ids)


def fuse(scores: list[ScoreVector]) -> ScoreVector:
    """Unweighted elementwise sum of aligned score vectors.

    A singleton list is returned unchanged (kind preserved); two or more
    vectors fuse into a ``"sum"`` vector.
    """
    if not scores:
        raise ValueError("nothing to fuse")
    first = scores[0]
    for other in scores[1:]:
        if len(other) != len(first):
            raise ValueError(
                f"length mismatch: {len(first)} vs {len(other)} ({other.kind})"
            )
        if other.sample_ids != first.sample_ids:
            raise ValueError(f"sample ids of {other.kind} are not aligned")
    if len(scores) == 1:
        return first
    total = np.sum([s.values for s in scores], axis=0)
    return ScoreVector(total, "sum", first.sample_ids)


def write_scores_csv(
    path,
    vectors: list[ScoreVector],
    labels,
    categories: list[str],
) -> None:
    """Write score vectors as ``sample_id,category,label,score_kind,value``.

    All vectors must be aligned with ``labels``/``categories``. Values
    are written with ``repr`` (shortest round-trip form) so re-reading
    reproduces the exact float64.
    """
    labels = np.asarray(labels, dtype=np.int64)
    for vec in vectors:
        if len(vec) != labels.size or len(vec) != len(categories):
            raise ValueError(
                f"{vec.kind} has {len(vec)} scores for {labels.size} labels "
                f"and {len(categories)} categories"
            )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_id", "category", "label", "score_kind", "value"])
        for vec in vectors:
            for i in range(len(vec)):
                writer.writerow(
                    [
                        vec.sample_ids[i],
                        categories[i],
                        int(labels[i]),
                        vec.kind,
                        repr(float(vec.values[i])),
                    ]
                )


def read_scores_csv(path) -> dict[str, tuple[ScoreVector, np.ndarray, list[str]]]:
    """Read a score CSV back into per-kind ``(scores, labels, categories)``."""
    by_kind: dict[str, list[tuple[str, str, int, float]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sample_id", "category", "label", "score_kind", "value"]:
            raise FormatError(f"{path}: unexpected header {header}")
        for row_num, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise FormatError(f"{path}: line {row_num} has {len(row)} fields")
            sample_id, category, label_text, kind, value_text = row
            try:
                label = int(label_text)
                value = float(value_text)
            except ValueError as exc:
                raise FormatError(f"{path}: line {row_num}: {exc}") from exc
            if label not in (0, 1):
                raise DataError(f"{path}: line {row_num}: label must be 0 or 1")
            by_kind.setdefault(kind, []).append((sample_id, category, label, value))
    out: dict[str, tuple[ScoreVector, np.ndarray, list[str]]] = {}
    for kind, rows in by_kind.items():
        ids = tuple(r[0] for r in rows)
        categories = [r[1] for r in rows]
        labels = np.array([r[2] for r in rows], dtype=np.int64)
        values = np.array([r[3] for r in rows], dtype=np.float64)
        out[kind] = (ScoreVector(values, kind, ids), labels, categories)
    return out
