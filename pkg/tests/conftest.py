"""Shared independent oracles used across the test modules.

These deliberately avoid the library's region machinery: coverage is computed
per pixel by direct containment tests, and maps are assembled by grouping
pixels on identical coverer sets.
"""

from __future__ import annotations

import numpy as np

from locdet.fusion import fuse_coverers
from locdet.geometry import BBox


def pixel_coverage_masks(width: int, height: int, boxes: list[BBox]) -> np.ndarray:
    """(n_boxes, H, W) boolean stack: direct per-pixel containment."""
    xs = np.arange(width)
    ys = np.arange(height)
    masks = np.zeros((len(boxes), height, width), dtype=bool)
    for i, b in enumerate(boxes):
        in_x = (xs >= b.x0) & (xs < b.x1)
        in_y = (ys >= b.y0) & (ys < b.y1)
        masks[i] = in_y[:, None] & in_x[None, :]
    return masks


def pixel_coverer_bitmask(width: int, height: int, boxes: list[BBox]) -> np.ndarray:
    """(H, W) integer bitmask of covering proposals per pixel."""
    masks = pixel_coverage_masks(width, height, boxes)
    bits = np.zeros((height, width), dtype=np.int64)
    for i in range(len(boxes)):
        bits |= masks[i].astype(np.int64) << i
    return bits


def bitmask_members(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if (mask >> i) & 1]


def brute_force_loc_map(width, height, inputs, method, seed=0):
    """Per-pixel map evaluation: group pixels by coverer set, fuse each group.

    Shares only the scalar fusion function with the library; coverage and
    assembly are independent of the intersection-closure path.
    """
    bits = pixel_coverer_bitmask(width, height, [inp.box for inp in inputs])
    raw = np.zeros((height, width), dtype=np.float64)
    covered = bits != 0
    for mask in np.unique(bits):
        if mask == 0:
            continue
        members = bitmask_members(int(mask))
        _, value = fuse_coverers(method, members, inputs, seed)
        raw[bits == mask] = value
    loc = np.zeros_like(raw)
    if covered.any():
        values = raw[covered]
        lo, hi = float(values.min()), float(values.max())
        span = hi - lo
        if span > 1e-12 * max(abs(hi), abs(lo)):
            loc[covered] = (raw[covered] - lo) / span
    return loc, covered
