"""Minimal binary netpbm raster I/O (P6 pixmaps, P5 graymaps), maxval 255."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import FormatError


def _read_header(data: bytes, magic: bytes, path: Path) -> tuple[int, int, int]:
    """Parse `magic width height maxval` allowing comments; return (w, h, data offset)."""
    if not data.startswith(magic):
        raise FormatError(f"{path}: expected {magic.decode()} header")
    pos = len(magic)
    fields: list[int] = []
    while len(fields) < 3:
        if pos >= len(data):
            raise FormatError(f"{path}: truncated header at byte {pos}")
        c = data[pos : pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            nl = data.find(b"\n", pos)
            if nl < 0:
                raise FormatError(f"{path}: unterminated comment at byte {pos}")
            pos = nl + 1
        elif c.isdigit():
            end = pos
            while end < len(data) and data[end : end + 1].isdigit():
                end += 1
            fields.append(int(data[pos:end]))
            pos = end
        else:
            raise FormatError(f"{path}: unexpected byte {c!r} at offset {pos}")
    if fields[2] != 255:
        raise FormatError(f"{path}: only maxval 255 supported, got {fields[2]}")
    return fields[0], fields[1], pos + 1


def read_ppm(path: str | Path) -> np.ndarray:
    """Read a binary P6 pixmap into a (H, W, 3) uint8 array."""
    path = Path(path)
    data = path.read_bytes()
    w, h, off = _read_header(data, b"P6", path)
    need = w * h * 3
    if len(data) - off < need:
        raise FormatError(f"{path}: pixel data truncated at byte {len(data)}")
    return np.frombuffer(data[off : off + need], dtype=np.uint8).reshape(h, w, 3).copy()


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary P5 graymap into a (H, W) uint8 array."""
    path = Path(path)
    data = path.read_bytes()
    w, h, off = _read_header(data, b"P5", path)
    need = w * h
    if len(data) - off < need:
        raise FormatError(f"{path}: pixel data truncated at byte {len(data)}")
    return np.frombuffer(data[off : off + need], dtype=np.uint8).reshape(h, w).copy()


def write_ppm(path: str | Path, image: np.ndarray) -> None:
    """Write a (H, W, 3) uint8 array as a binary P6 pixmap."""
    arr = np.ascontiguousarray(image, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise FormatError(f"P6 writer needs (H, W, 3) uint8, got shape {arr.shape}")
    h, w = arr.shape[:2]
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(arr.tobytes())


def write_pgm(path: str | Path, image: np.ndarray) -> None:
    """Write a (H, W) uint8 array as a binary P5 graymap."""
    arr = np.ascontiguousarray(image, dtype=np.uint8)
    if arr.ndim != 2:
        raise FormatError(f"P5 writer needs (H, W) uint8, got shape {arr.shape}")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(arr.tobytes())
