"""Extraction driver: prompt files and manifests in, EMB1 files out.

Beside every EMB1 file a ``<name>.provenance.json`` sidecar records the
encoder/model/pretrained tags and extraction settings. Prompt lines
whose token count exceeds the encoder's maximum are embedded anyway
(the tokenizer truncates) and recorded per line in an ``overflows.log``
sidecar.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .config import ExtractorConfig
from .emb1 import write_emb1
from .encoders import Encoder
from .errors import DataError
from .manifestfile import Manifest, read_manifest
from .preprocessing import five_crops, load_rgb, standard_crop
from .promptfile import read_prompt_file


@dataclass(frozen=True)
class ExtractionResult:
    emb1_paths: tuple[str, ...]
    provenance_paths: tuple[str, ...]
    overflow_log_path: str | None
    rows: int
    dim: int


def _batched(items: list, size: int):
    for start in range(0, len(items), size):
        yield start, items[start : start + size]


def _write_provenance(emb1_path: str, cfg: ExtractorConfig, encoder: Encoder,
                      source: str, rows: int, extra: dict) -> str:
    doc = {
        "format": "EMB1",
        "encoder": encoder.name,
        "model_tag": cfg.model_tag,
        "pretrained_tag": cfg.pretrained_tag,
        "device": cfg.device,
        "batch_size": cfg.batch_size,
        "source": source,
        "rows": rows,
        "dim": encoder.dim,
        **extra,
    }
    path = emb1_path + ".provenance.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _encode_texts(encoder: Encoder, texts: list[str], batch_size: int):
    rows = np.empty((len(texts), encoder.dim), dtype=np.float32)
    counts: list[int] = []
    for start, chunk in _batched(texts, batch_size):
        chunk_rows, chunk_counts = encoder.encode_texts(chunk)
        rows[start : start + len(chunk)] = chunk_rows
        counts.extend(chunk_counts)
    return rows, counts


def embed_prompts(
    prompt_path, out_dir, cfg: ExtractorConfig, encoder: Encoder
) -> ExtractionResult:
    """Embed a paired prompt file into ``normals.emb1``/``anomalies.emb1``.

    Row ``i`` of each output is pair ``i`` of the prompt file, so the
    downstream trainer's ``pair_index = row index`` mapping holds by
    construction.
    """
    prompt_set = read_prompt_file(prompt_path)
    os.makedirs(out_dir, exist_ok=True)
    overflows: list[str] = []
    outputs: list[str] = []
    sidecars: list[str] = []
    for name, role, texts in (
        ("normals", "normal", list(prompt_set.normals)),
        ("anomalies", "anomaly", list(prompt_set.anomalies)),
    ):
        rows, counts = _encode_texts(encoder, texts, cfg.batch_size)
        role_overflows = 0
        for pair_index, count in enumerate(counts):
            if count > encoder.max_tokens:
                role_overflows += 1
                overflows.append(
                    f"pair {pair_index} {role}: {count} tokens exceed "
                    f"max {encoder.max_tokens}; tokenizer truncated"
                )
        out_path = os.path.join(out_dir, f"{name}.emb1")
        write_emb1(rows, "text", out_path)
        outputs.append(out_path)
        sidecars.append(
            _write_provenance(
                out_path, cfg, encoder, source=str(prompt_path), rows=len(texts),
                extra={"role": name, "prompt_seed": prompt_set.seed,
                       "token_overflows": role_overflows},
            )
        )
    log_path = None
    if overflows:
        log_path = os.path.join(out_dir, "overflows.log")
        with open(log_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(overflows) + "\n")
    return ExtractionResult(
        emb1_paths=tuple(outputs),
        provenance_paths=tuple(sidecars),
        overflow_log_path=log_path,
        rows=prompt_set.count,
        dim=encoder.dim,
    )


def _embed_single_crop(
    manifest: Manifest, root: str, cfg: ExtractorConfig, encoder: Encoder
) -> np.ndarray:
    rows = np.empty((len(manifest.entries), encoder.dim), dtype=np.float32)
    for start, chunk in _batched(manifest.paths, cfg.batch_size):
        crops = [
            standard_crop(load_rgb(os.path.join(root, p)), encoder.resolution)
            for p in chunk
        ]
        rows[start : start + len(chunk)] = encoder.encode_crops(crops)
    return rows


def _embed_multi_crop(
    manifest: Manifest, root: str, cfg: ExtractorConfig, encoder: Encoder
) -> np.ndarray:
    rows = np.empty((len(manifest.entries), encoder.dim), dtype=np.float32)
    for start, chunk in _batched(manifest.paths, cfg.batch_size):
        crops = []
        for p in chunk:
            crops.extend(five_crops(load_rgb(os.path.join(root, p)), encoder.resolution))
        flat = encoder.encode_crops(crops).reshape(len(chunk), 5, encoder.dim)
        mean = flat.astype(np.float64).mean(axis=1)
        norms = np.linalg.norm(mean, axis=1)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise DataError(
                f"averaged embedding of {chunk[zero[0]]!r} has zero norm"
            )
        rows[start : start + len(chunk)] = (mean / norms[:, None]).astype(np.float32)
    return rows


def embed_images(
    manifest_path, out_path, cfg: ExtractorConfig, encoder: Encoder,
    root: str | None = None,
) -> ExtractionResult:
    """Embed every manifest entry's image into one EMB1 row, in order.

    Manifest paths resolve against ``root`` (default: the manifest's
    directory). With ``cfg.multi_crop`` each row is the L2-normalized
    mean of five crop embeddings; otherwise it is the raw encoder output
    for the standard center crop.
    """
    manifest = read_manifest(manifest_path)
    if root is None:
        root = os.path.dirname(os.fspath(manifest_path)) or "."
    if cfg.multi_crop:
        rows = _embed_multi_crop(manifest, root, cfg, encoder)
    else:
        rows = _embed_single_crop(manifest, root, cfg, encoder)
    write_emb1(rows, "image", out_path)
    sidecar = _write_provenance(
        os.fspath(out_path), cfg, encoder, source=str(manifest_path),
        rows=len(manifest.entries), extra={"multi_crop": cfg.multi_crop},
    )
    return ExtractionResult(
        emb1_paths=(os.fspath(out_path),),
        provenance_paths=(sidecar,),
        overflow_log_path=None,
        rows=len(manifest.entries),
        dim=encoder.dim,
    )
