"""clip_bridge: OpenCLIP embedding extraction into EMB1 files.

The bridge reads paired prompt files and dataset manifests, runs a text
or image encoder, and writes EMB1 embedding files (plus provenance
sidecars) that the anomaly-detection toolkit consumes. It shares no
code with that toolkit; the file formats are the entire contract.
"""

from .config import DEFAULT_MODEL_TAG, DEFAULT_PRETRAINED_TAG, ExtractorConfig
from .emb1 import read_emb1, write_emb1
from .encoders import (
    ENCODER_KINDS,
    Encoder,
    OpenClipEncoder,
    StubEncoder,
    make_encoder,
)
from .errors import (
    BridgeError,
    ConfigError,
    DataError,
    EncoderError,
    FormatError,
)
from .extract import ExtractionResult, embed_images, embed_prompts
from .manifestfile import Manifest, ManifestEntry, read_manifest
from .preprocessing import (
    MULTI_CROP_RESIZE,
    center_crop,
    five_crops,
    load_rgb,
    resize_short_side,
    standard_crop,
)
from .promptfile import PromptSet, read_prompt_file

__version__ = "0.1.0"

__all__ = [
    "BridgeError",
    "ConfigError",
    "DataError",
    "DEFAULT_MODEL_TAG",
    "DEFAULT_PRETRAINED_TAG",
    "Encoder",
    "EncoderError",
    "ENCODER_KINDS",
    "ExtractionResult",
    "ExtractorConfig",
    "FormatError",
    "Manifest",
    "ManifestEntry",
    "MULTI_CROP_RESIZE",
    "OpenClipEncoder",
    "PromptSet",
    "StubEncoder",
    "center_crop",
    "embed_images",
    "embed_prompts",
    "five_crops",
    "load_rgb",
    "make_encoder",
    "read_emb1",
    "read_manifest",
    "read_prompt_file",
    "resize_short_side",
    "standard_crop",
    "write_emb1",
]
