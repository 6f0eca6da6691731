"""Extractor configuration shared by both CLI commands."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError

DEFAULT_MODEL_TAG = "ViT-B-16-plus-240"
DEFAULT_PRETRAINED_TAG = "laion400m_e31"


@dataclass(frozen=True)
class ExtractorConfig:
    """Which encoder to run and how to batch it.

    ``model_tag``/``pretrained_tag`` name the OpenCLIP model and weight
    set; both are recorded verbatim in the provenance sidecar so any
    preprocessing discrepancy stays diagnosable. ``multi_crop`` selects
    five-crop averaging for images (ignored for text).
    """

    model_tag: str = DEFAULT_MODEL_TAG
    pretrained_tag: str = DEFAULT_PRETRAINED_TAG
    device: str = "cpu"
    batch_size: int = 32
    multi_crop: bool = False

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        for name in ("model_tag", "pretrained_tag", "device"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be non-empty")
