"""Binary embedding matrices ("EMB1") and row-wise utilities.

On-disk layout, all little-endian:

    offset  size  field
    0       4     magic ``45 4D 42 31`` (ASCII "EMB1")
    4       2     version, u16 = 1
    6       1     kind, u8 (0 = text, 1 = image)
    7       1     reserved, u8 = 0
    8       4     dim, u32 (>= 1)
    12      8     count, u64
    20      -     count * dim IEEE-754 float32 values, row-major

The format is deliberately trivial to read and write from any language;
it is the interchange format between this package and external
embedding extractors.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorruptionError, DataError, FormatError

_MAGIC = b"EMB1"
_VERSION = 1
_HEADER = struct.Struct("<4sHBBIQ")

_KIND_TO_CODE = {"text": 0, "image": 1}
_CODE_TO_KIND = {code: kind for kind, code in _KIND_TO_CODE.items()}

HEADER_SIZE = _HEADER.size


class EmbeddingMatrix:
    """``count`` rows of ``dim``-dimensional float32 vectors with a
    text/image provenance tag. Finite by construction."""

    __slots__ = ("data", "kind")

    def __init__(self, data, kind: str) -> None:
        if kind not in _KIND_TO_CODE:
            raise ValueError(f"kind must be one of {sorted(_KIND_TO_CODE)}, got {kind!r}")
        arr = np.ascontiguousarray(data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"embedding data must be 2-D, got shape {arr.shape}")
        if arr.shape[1] < 1:
            raise ValueError("embedding dimension must be >= 1")
        if not np.isfinite(arr).all():
            raise DataError("embedding data contains non-finite values")
        self.data = arr
        self.kind = kind

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"EmbeddingMatrix(count={self.count}, dim={self.dim}, kind={self.kind!r})"


def write_embeddings(matrix: EmbeddingMatrix, path) -> None:
    """Write ``matrix`` to ``path`` in the EMB1 format."""
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        _KIND_TO_CODE[matrix.kind],
        0,
        matrix.dim,
        matrix.count,
    )
    payload = np.ascontiguousarray(matrix.data, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_embeddings(path) -> EmbeddingMatrix:
    """Read an EMB1 file, validating header, payload size and finiteness."""
    with open(path, "rb") as fh:
        raw_header = fh.read(HEADER_SIZE)
        if len(raw_header) < HEADER_SIZE:
            raise CorruptionError(f"{path}: truncated header")
        magic, version, kind_code, reserved, dim, count = _HEADER.unpack(raw_header)
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
        raise CorruptionError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} "
            f"({count} x {dim} float32)"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    if not np.isfinite(data).all():
        raise DataError(f"{path}: payload contains non-finite values")
    return EmbeddingMatrix(data, _CODE_TO_KIND[kind_code])


def l2_normalize(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Divide every row by its Euclidean norm."""
    data = matrix.data.astype(np.float64)
    norms = np.linalg.norm(data, axis=1)
    zero_rows = np.flatnonzero(norms == 0.0)
    if zero_rows.size:
        raise DataError(f"row {zero_rows[0]} has zero norm and cannot be normalized")
    return EmbeddingMatrix(data / norms[:, None], matrix.kind)


def unit_rows(data: np.ndarray) -> np.ndarray:
    """Float64 row-normalized copy of a 2-D array (internal helper)."""
    rows = np.asarray(data, dtype=np.float64)
    norms = np.linalg.norm(rows, axis=1)
    zero_rows = np.flatnonzero(norms == 0.0)
    if zero_rows.size:
        raise DataError(f"row {zero_rows[0]} has zero norm and cannot be normalized")
    return rows / norms[:, None]


@dataclass(frozen=True)
class PairedEmbeddingSet:
    """Aligned normal/anomaly embedding matrices: row i of each is pair i."""

    normals: EmbeddingMatrix
    anomalies: EmbeddingMatrix

    def __post_init__(self) -> None:
        if self.normals.count != self.anomalies.count:
            raise DataError(
                f"pair count mismatch: {self.normals.count} normals vs "
                f"{self.anomalies.count} anomalies"
            )
        if self.normals.dim != self.anomalies.dim:
            raise DataError(
                f"dimension mismatch: {self.normals.dim} vs {self.anomalies.dim}"
            )
        if self.normals.count == 0:
            raise DataError("paired embedding set is empty")

    @property
    def count(self) -> int:
        return self.normals.count

    @property
    def dim(self) -> int:
        return self.normals.dim

    @classmethod
    def load(cls, normals_path, anomalies_path) -> "PairedEmbeddingSet":
        return cls(read_embeddings(normals_path), read_embeddings(anomalies_path))
