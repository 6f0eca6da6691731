"""EMB1 writer/reader: the binary interchange format consumed downstream.

On-disk layout, all little-endian:

    offset  size  field
    0       4     magic ``45 4D 42 31`` (ASCII "EMB1")
    4       2     version, u16 = 1
    6       1     kind, u8 (0 = text, 1 = image)
    7       1     reserved, u8 = 0
    8       4     dim, u32 (>= 1)
    12      8     count, u64
    20      -     count * dim IEEE-754 float32 values, row-major

This codec is implemented here independently (the bridge shares no code
with its consumers); interoperability is pinned by tests that read the
bridge's output with the downstream toolkit.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import DataError, FormatError

_MAGIC = b"EMB1"
_VERSION = 1
_HEADER = struct.Struct("<4sHBBIQ")

_KIND_TO_CODE = {"text": 0, "image": 1}
_CODE_TO_KIND = {code: kind for kind, code in _KIND_TO_CODE.items()}

HEADER_SIZE = _HEADER.size


def write_emb1(data, kind: str, path) -> None:
    """Write a 2-D float array as an EMB1 file of the given kind."""
    if kind not in _KIND_TO_CODE:
        raise DataError(f"kind must be one of {sorted(_KIND_TO_CODE)}, got {kind!r}")
    arr = np.ascontiguousarray(data, dtype="<f4")
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise DataError(f"embedding data must be 2-D with dim >= 1, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise DataError("embedding data contains non-finite values")
    header = _HEADER.pack(
        _MAGIC, _VERSION, _KIND_TO_CODE[kind], 0, arr.shape[1], arr.shape[0]
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes())


def read_emb1(path) -> tuple[np.ndarray, str]:
    """Read an EMB1 file back as ``(float32 array, kind)``."""
    with open(path, "rb") as fh:
        raw = fh.read(HEADER_SIZE)
        if len(raw) < HEADER_SIZE:
            raise FormatError(f"{path}: truncated header")
        magic, version, kind_code, reserved, dim, count = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != _VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if kind_code not in _CODE_TO_KIND:
            raise FormatError(f"{path}: unknown kind code {kind_code}")
        if reserved != 0:
            raise FormatError(f"{path}: non-zero reserved byte {reserved}")
        if dim < 1:
            raise FormatError(f"{path}: dim must be >= 1, got {dim}")
        payload = fh.read()
    expected = count * dim * 4
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    if not np.isfinite(data).all():
        raise DataError(f"{path}: payload contains non-finite values")
    return data.copy(), _CODE_TO_KIND[kind_code]
