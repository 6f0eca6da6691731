"""PIL-based image preprocessing: loading, resizing and cropping.

Two crop policies feed the encoder:

* standard: resize the short side to the encoder's native resolution,
  center-crop to a square (the usual CLIP evaluation transform);
* multi-crop: resize the short side to ``MULTI_CROP_RESIZE`` (270) and
  take the center plus all four corner crops at the native resolution;
  the extractor averages the five embeddings and re-normalizes.

Crops are returned as ``(res, res, 3)`` uint8 RGB arrays; encoder
backends own any further normalization. Grayscale (and palette/alpha)
inputs are converted to RGB, which replicates single channels.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import DataError

MULTI_CROP_RESIZE = 270


def load_rgb(path) -> Image.Image:
    """Open an image as RGB; failures name the offending path."""
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except (OSError, ValueError, Image.DecompressionBombError) as exc:
        raise DataError(f"cannot read image {path!r}: {exc}") from exc


def resize_short_side(img: Image.Image, target: int) -> Image.Image:
    """Bicubic resize so the shorter side equals ``target`` exactly."""
    width, height = img.size
    if width <= height:
        new_size = (target, max(target, round(height * target / width)))
    else:
        new_size = (max(target, round(width * target / height)), target)
    return img.resize(new_size, Image.Resampling.BICUBIC)


def center_crop(img: Image.Image, size: int) -> Image.Image:
    width, height = img.size
    left = (width - size) // 2
    top = (height - size) // 2
    return img.crop((left, top, left + size, top + size))


def standard_crop(img: Image.Image, resolution: int) -> np.ndarray:
    """The single evaluation crop as a uint8 array."""
    cropped = center_crop(resize_short_side(img, resolution), resolution)
    return np.asarray(cropped, dtype=np.uint8)


def five_crops(img: Image.Image, resolution: int) -> list[np.ndarray]:
    """Center plus four corner crops after the multi-crop resize."""
    resized = resize_short_side(img, MULTI_CROP_RESIZE)
    width, height = resized.size
    if width < resolution or height < resolution:
        raise DataError(
            f"image resized to {width}x{height} is smaller than the "
            f"{resolution}x{resolution} crop"
        )
    boxes = [
        ((width - resolution) // 2, (height - resolution) // 2),  # center
        (0, 0),
        (width - resolution, 0),
        (0, height - resolution),
        (width - resolution, height - resolution),
    ]
    return [
        np.asarray(
            resized.crop((left, top, left + resolution, top + resolution)),
            dtype=np.uint8,
        )
        for left, top in boxes
    ]
