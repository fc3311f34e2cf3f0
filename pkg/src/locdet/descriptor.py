"""Subimage descriptors: a deterministic grid-of-cell-means vector plus feature file I/O.

The built-in descriptor crops a box, resizes the crop to a canonical square with
bilinear sampling, converts to grayscale, averages intensity over a fixed cell
grid (row-major), and L2-normalizes the result. Externally computed vectors of
any fixed dimension can be loaded from the binary feature file instead; they go
through the same normalization so retrieval sees unit vectors either way.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DegenerateInputError, FormatError, InvalidInputError
from .geometry import BBox

FEATURE_MAGIC = b"RLFEAT01"


@dataclass(frozen=True)
class DescriptorConfig:
    canonical_size: int = 256
    builtin_grid: int = 16

    def __post_init__(self) -> None:
        if not (self.canonical_size >= self.builtin_grid >= 1):
            raise InvalidInputError(
                f"need canonical_size >= builtin_grid >= 1, "
                f"got {self.canonical_size}, {self.builtin_grid}"
            )

    @property
    def dimension(self) -> int:
        return self.builtin_grid * self.builtin_grid


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Scale a vector to unit L2 norm, preserving direction."""
    arr = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateInputError("cannot normalize a zero or non-finite vector")
    return arr / norm


def to_storage_precision(v: np.ndarray) -> np.ndarray:
    """Quantize a vector through the feature file's f32 precision and renormalize.

    Applying this to freshly extracted query vectors makes them bit-compatible
    with database vectors reloaded from disk, so identical subimage content
    compares at distance exactly zero.
    """
    return l2_normalize(np.asarray(v, dtype=np.float32).astype(np.float64))


def _axis_samples(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # half-pixel-center sampling; exact identity when n_in == n_out
    pos = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    pos = np.clip(pos, 0.0, float(n_in - 1))
    lo = np.floor(pos).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, pos - lo


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Separable bilinear resize in float64 with clamped edges."""
    arr = np.asarray(img, dtype=np.float64)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, None]
    h, w = arr.shape[:2]
    ylo, yhi, ty = _axis_samples(h, out_h)
    xlo, xhi, tx = _axis_samples(w, out_w)
    rows = arr[ylo] * (1.0 - ty)[:, None, None] + arr[yhi] * ty[:, None, None]
    out = rows[:, xlo] * (1.0 - tx)[None, :, None] + rows[:, xhi] * tx[None, :, None]
    return out[:, :, 0] if squeeze else out


def extract_builtin(
    image: np.ndarray, box: BBox, cfg: DescriptorConfig = DescriptorConfig()
) -> np.ndarray:
    """Deterministic descriptor of one subimage: unit vector of grid-cell means."""
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    height, width = arr.shape[:2]
    if not box.within_frame(width, height):
        raise InvalidInputError(
            f"box {box.as_tuple()} exceeds the {width}x{height} image frame"
        )
    crop = arr[box.y0 : box.y1, box.x0 : box.x1].astype(np.float64)
    resized = resize_bilinear(crop, cfg.canonical_size, cfg.canonical_size)
    gray = resized.mean(axis=2)
    edges = (np.arange(cfg.builtin_grid + 1, dtype=np.int64) * cfg.canonical_size) // cfg.builtin_grid
    sums = np.add.reduceat(np.add.reduceat(gray, edges[:-1], axis=0), edges[:-1], axis=1)
    counts = np.diff(edges)
    cells = sums / (counts[:, None] * counts[None, :])
    return l2_normalize(cells.ravel())


def write_feature_file(
    path: str | Path, records: Iterable[tuple[str, BBox, np.ndarray]]
) -> None:
    """Serialize (image_id, box, vector) records to the binary feature format.

    Layout: magic ``RLFEAT01``, u32 dimension, u32 count, then per record a
    u32-length-prefixed UTF-8 image id, four i32 box coordinates, and the
    vector as little-endian f32. All integers little-endian.
    """
    items = list(records)
    if not items:
        raise InvalidInputError("feature file needs at least one record")
    dim = int(np.asarray(items[0][2]).shape[0])
    chunks = [FEATURE_MAGIC, struct.pack("<II", dim, len(items))]
    for image_id, box, vec in items:
        arr = np.asarray(vec, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] != dim:
            raise InvalidInputError(
                f"record for {image_id!r} has dimension {arr.shape}, expected ({dim},)"
            )
        encoded = image_id.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<4i", *box.as_tuple()))
        chunks.append(arr.astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def read_feature_records(path: str | Path) -> tuple[list[tuple[str, BBox, np.ndarray]], int]:
    """Read feature records in file order; vectors re-normalized to unit L2."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 16 or data[:8] != FEATURE_MAGIC:
        raise FormatError(f"{path}: bad magic at byte 0")
    dim, count = struct.unpack_from("<II", data, 8)
    if dim == 0:
        raise FormatError(f"{path}: zero dimension in header at byte 8")
    off = 16
    records: list[tuple[str, BBox, np.ndarray]] = []
    for i in range(count):
        if off + 4 > len(data):
            raise FormatError(f"{path}: truncated record {i} at byte {off}")
        (id_len,) = struct.unpack_from("<I", data, off)
        off += 4
        body = id_len + 16 + 4 * dim
        if off + body > len(data):
            raise FormatError(f"{path}: truncated record {i} at byte {off}")
        try:
            image_id = data[off : off + id_len].decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"{path}: bad image id in record {i} at byte {off}") from e
        off += id_len
        coords = struct.unpack_from("<4i", data, off)
        off += 16
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=off).astype(np.float64)
        off += 4 * dim
        try:
            box = BBox(*coords)
            vec = l2_normalize(vec)
        except (InvalidInputError, DegenerateInputError) as e:
            raise FormatError(f"{path}: record {i} invalid near byte {off}: {e}") from e
        records.append((image_id, box, vec))
    if off != len(data):
        raise FormatError(f"{path}: {len(data) - off} trailing bytes at byte {off}")
    return records, int(dim)


@dataclass(frozen=True)
class ExternalFeatures:
    """Externally computed descriptors keyed by (image_id, box)."""

    features: dict[tuple[str, BBox], np.ndarray]
    dimension: int

    def lookup(self, image_id: str, box: BBox) -> np.ndarray:
        key = (image_id, box)
        if key not in self.features:
            raise InvalidInputError(
                f"no external feature for image {image_id!r} box {box.as_tuple()}"
            )
        return self.features[key]


def load_external_features(path: str | Path) -> ExternalFeatures:
    """Load a feature file into a lookup map; duplicate keys are a format error."""
    records, dim = read_feature_records(path)
    features: dict[tuple[str, BBox], np.ndarray] = {}
    for image_id, box, vec in records:
        key = (image_id, box)
        if key in features:
            raise FormatError(
                f"{path}: duplicate record for image {image_id!r} box {box.as_tuple()}"
            )
        features[key] = vec
    return ExternalFeatures(features, dim)
