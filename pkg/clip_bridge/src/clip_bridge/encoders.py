"""Encoder backends behind one small protocol.

``OpenClipEncoder`` wraps the reference encoder (imported lazily so the
package works without ``open-clip-torch``); ``StubEncoder`` is a fully
deterministic hash-based stand-in that exercises every pipeline path
offline. Both consume the uint8 crops produced by
:mod:`clip_bridge.preprocessing` and return float32 rows.
"""

from __future__ import annotations

import hashlib
from typing import Protocol

import numpy as np

from .config import ExtractorConfig
from .errors import ConfigError, EncoderError

# native square resolution and embedding width per known model tag;
# unknown tags fall back to the reference model's values
MODEL_RESOLUTIONS = {"ViT-B-16-plus-240": 240}
MODEL_DIMS = {"ViT-B-16-plus-240": 640}
DEFAULT_RESOLUTION = 240
DEFAULT_DIM = 640
MAX_TOKENS = 77  # CLIP context length including start/end tokens


class Encoder(Protocol):
    """What the extractor needs from a backend."""

    name: str
    dim: int
    resolution: int
    max_tokens: int

    def encode_texts(self, texts: list[str]) -> tuple[np.ndarray, list[int]]:
        """Embed texts; returns ``(rows, token_counts)`` with counts
        measured before any truncation."""
        ...

    def encode_crops(self, crops: list[np.ndarray]) -> np.ndarray:
        """Embed preprocessed uint8 crops, one row per crop."""
        ...


class StubEncoder:
    """Deterministic offline encoder.

    Every output row is drawn from a generator seeded by a SHA-256 of
    the model/pretrained tags and the exact input bytes, so identical
    inputs give identical embeddings across runs and platforms while
    distinct inputs are (overwhelmingly) distinct. Token counts model
    CLIP's byte-pair tokenizer as one token per whitespace word plus
    the start/end tokens.
    """

    name = "stub"
    max_tokens = MAX_TOKENS

    def __init__(self, model_tag: str, pretrained_tag: str, dim: int | None = None):
        self.model_tag = model_tag
        self.pretrained_tag = pretrained_tag
        self.dim = dim if dim is not None else MODEL_DIMS.get(model_tag, DEFAULT_DIM)
        self.resolution = MODEL_RESOLUTIONS.get(model_tag, DEFAULT_RESOLUTION)

    def _row(self, payload: bytes) -> np.ndarray:
        digest = hashlib.sha256(
            f"{self.model_tag}|{self.pretrained_tag}|".encode() + payload
        ).digest()
        seed = int.from_bytes(digest[:8], "little")
        rng = np.random.Generator(np.random.PCG64(seed))
        return rng.standard_normal(self.dim).astype(np.float32)

    def encode_texts(self, texts: list[str]) -> tuple[np.ndarray, list[int]]:
        rows = np.stack([self._row(b"text:" + t.encode("utf-8")) for t in texts])
        counts = [len(t.split()) + 2 for t in texts]
        return rows, counts

    def encode_crops(self, crops: list[np.ndarray]) -> np.ndarray:
        rows = []
        for crop in crops:
            arr = np.ascontiguousarray(crop, dtype=np.uint8)
            rows.append(self._row(b"image:" + arr.tobytes()))
        return np.stack(rows)


class OpenClipEncoder:
    """The reference OpenCLIP encoder, loaded lazily and run in eval mode."""

    name = "open_clip"
    max_tokens = MAX_TOKENS

    def __init__(self, cfg: ExtractorConfig):
        try:
            import open_clip
            import torch
        except ImportError as exc:
            raise EncoderError(
                "open-clip-torch is not installed; install the 'openclip' extra "
                "or select --encoder stub"
            ) from exc
        self._torch = torch
        self._open_clip = open_clip
        self.model_tag = cfg.model_tag
        self.pretrained_tag = cfg.pretrained_tag
        self.device = cfg.device
        model, _, _ = open_clip.create_model_and_transforms(
            cfg.model_tag, pretrained=cfg.pretrained_tag, device=cfg.device
        )
        self._model = model.eval()
        self._tokenizer = open_clip.get_tokenizer(cfg.model_tag)
        self.resolution = MODEL_RESOLUTIONS.get(cfg.model_tag, DEFAULT_RESOLUTION)
        self.dim = MODEL_DIMS.get(cfg.model_tag, DEFAULT_DIM)
        mean = getattr(open_clip, "OPENAI_DATASET_MEAN", (0.48145466, 0.4578275, 0.40821073))
        std = getattr(open_clip, "OPENAI_DATASET_STD", (0.26862954, 0.26130258, 0.27577711))
        self._mean = np.asarray(mean, dtype=np.float32)
        self._std = np.asarray(std, dtype=np.float32)

    def _token_count(self, text: str) -> int:
        tokenizer = self._tokenizer
        encode = getattr(tokenizer, "encode", None)
        if encode is None and hasattr(tokenizer, "tokenizer"):
            encode = getattr(tokenizer.tokenizer, "encode", None)
        if encode is None:  # pragma: no cover - tokenizer variant without encode
            return 0
        return len(encode(text)) + 2  # plus start/end tokens

    def encode_texts(self, texts: list[str]) -> tuple[np.ndarray, list[int]]:
        torch = self._torch
        tokens = self._tokenizer(texts).to(self.device)
        with torch.no_grad():
            rows = self._model.encode_text(tokens).cpu().numpy().astype(np.float32)
        return rows, [self._token_count(t) for t in texts]

    def encode_crops(self, crops: list[np.ndarray]) -> np.ndarray:
        torch = self._torch
        batch = np.stack([c.astype(np.float32) / 255.0 for c in crops])
        batch = (batch - self._mean) / self._std
        tensor = torch.from_numpy(batch.transpose(0, 3, 1, 2)).to(self.device)
        with torch.no_grad():
            rows = self._model.encode_image(tensor).cpu().numpy().astype(np.float32)
        return rows


ENCODER_KINDS = ("open_clip", "stub")


def make_encoder(kind: str, cfg: ExtractorConfig) -> Encoder:
    """Construct a backend by name; unknown names are config errors."""
    if kind == "open_clip":
        return OpenClipEncoder(cfg)
    if kind == "stub":
        return StubEncoder(cfg.model_tag, cfg.pretrained_tag)
    raise ConfigError(f"unknown encoder {kind!r}; valid: {', '.join(ENCODER_KINDS)}")
