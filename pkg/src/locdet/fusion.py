"""Pixel-wise fusion of per-proposal localization evidence into a change map.

Each pixel belongs to some subset of the original proposals. For the rank
methods the normalized ground-truth ranks of exactly those proposals are fused
with an overlap-weighted reciprocal-rank rule; for the score baselines the
relevance scores are combined with max or sum. The raw per-pixel values are then
min-max rescaled per image into [0, 1], where high values mean "likely changed".

Maps are assembled region-by-region over the intersection closure of the
proposal set, which is exactly equivalent to evaluating every pixel
independently (painting regions in ascending coverer-count order leaves each
pixel with the value of its full coverer set).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, NoEvidenceError
from .geometry import BBox, Region, RegionPartition, intersection_closure
from .images import write_pgm

RANK_FUSION = "rank_fusion"
RANK_FUSION_CAP2 = "rank_fusion_cap2"
RANK_FUSION_CAP3 = "rank_fusion_cap3"
RANK_NO_FUSION = "rank_no_fusion"
SCORE_MAX = "score_max"
SCORE_SUM = "score_sum"

METHODS = (RANK_FUSION, RANK_FUSION_CAP2, RANK_FUSION_CAP3, RANK_NO_FUSION, SCORE_MAX, SCORE_SUM)
RANK_METHODS = (RANK_FUSION, RANK_FUSION_CAP2, RANK_FUSION_CAP3, RANK_NO_FUSION)
SCORE_METHODS = (SCORE_MAX, SCORE_SUM)

# Relative spread below which a raw map counts as constant and rescales to zero.
_CONSTANT_SPAN = 1e-12


@dataclass(frozen=True)
class FusionInput:
    """Evidence attached to one original proposal."""

    box: BBox
    rank: float | None = None  # normalized ground-truth rank in (0, 1]
    score: float | None = None  # relevance score >= 0 (a feature distance)


@dataclass
class LoCMap:
    """Per-pixel likelihood-of-change raster with its coverage mask."""

    method: str
    loc: np.ndarray  # (H, W) float64 in [0, 1]; 0 where uncovered
    covered: np.ndarray  # (H, W) bool

    @property
    def height(self) -> int:
        return int(self.loc.shape[0])

    @property
    def width(self) -> int:
        return int(self.loc.shape[1])


def rank_fuse(ranks: Sequence[float]) -> float:
    """Overlap-weighted reciprocal-rank fusion: N times the sum of 1/rank.

    Reciprocals are summed smallest-first, which makes the result independent
    of input order down to the last bit.
    """
    if len(ranks) == 0:
        raise InvalidInputError("rank fusion needs at least one rank")
    for r in ranks:
        if not 0.0 < r <= 1.0:
            raise InvalidInputError(f"normalized ranks must lie in (0, 1], got {r}")
    total = 0.0
    for r in sorted(ranks, reverse=True):
        total += 1.0 / r
    return len(ranks) * total


def _capped_selection(n: int, k_max: int, seed_material: tuple[int, ...]) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed_material))
    return np.sort(rng.choice(n, size=k_max, replace=False))


def rank_fuse_capped(ranks: Sequence[float], k_max: int, seed: int = 0) -> float:
    """Rank fusion over at most k_max ranks, chosen by a seeded uniform draw."""
    if k_max < 1:
        raise InvalidInputError(f"k_max must be positive, got {k_max}")
    if len(ranks) <= k_max:
        return rank_fuse(ranks)
    chosen = _capped_selection(len(ranks), k_max, (seed,))
    return rank_fuse([ranks[i] for i in chosen])


def score_max(values: Sequence[float]) -> float:
    if len(values) == 0:
        raise InvalidInputError("score fusion needs at least one value")
    return float(max(values))


def score_sum(values: Sequence[float]) -> float:
    if len(values) == 0:
        raise InvalidInputError("score fusion needs at least one value")
    return float(sum(values))


def _cap_for(method: str) -> int | None:
    if method == RANK_FUSION_CAP2:
        return 2
    if method == RANK_FUSION_CAP3:
        return 3
    return None


def fuse_coverers(
    method: str,
    coverers: Sequence[int],
    inputs: Sequence[FusionInput],
    seed: int = 0,
) -> tuple[float, float]:
    """Fused value and raw pre-rescale map value for one coverer set.

    `coverers` must be the sorted indices of every original proposal containing
    the pixel (or region) of interest. This single choke point is shared by the
    region-painting map builder and by per-pixel evaluation, so the two produce
    bit-identical maps. For the capped methods the subset draw is seeded by
    (seed, coverer set), making it a pure function of the pixel's coverage.

    Raw rank-method values are N^2/(N^2 + fused), which decreases with fusion
    quality and, unlike 1/(1 + fused), does not vary with the overlap count
    when all ranks are equal (an all-perfect image maps to a constant raster).
    """
    if method not in METHODS:
        raise InvalidInputError(f"unknown method {method!r}")
    members = list(coverers)
    if not members:
        raise InvalidInputError("a covered pixel must have at least one coverer")

    if method in SCORE_METHODS:
        values = [_require_score(inputs[k], k) for k in members]
        fused = score_max(values) if method == SCORE_MAX else score_sum(values)
        return fused, fused

    ranks = [_require_rank(inputs[k], k) for k in members]
    if method == RANK_NO_FUSION:
        smallest = min(members, key=lambda k: (inputs[k].box.area, k))
        fused = rank_fuse([_require_rank(inputs[smallest], smallest)])
        n_eff = 1
    else:
        cap = _cap_for(method)
        if cap is not None and len(ranks) > cap:
            chosen = _capped_selection(len(ranks), cap, (seed, *members))
            fused = rank_fuse([ranks[i] for i in chosen])
            n_eff = cap
        else:
            fused = rank_fuse(ranks)
            n_eff = len(ranks)
    n_sq = float(n_eff * n_eff)
    return fused, n_sq / (n_sq + fused)


def _require_rank(inp: FusionInput, k: int) -> float:
    if inp.rank is None:
        raise InvalidInputError(f"proposal {k} is missing its normalized rank")
    return inp.rank


def _require_score(inp: FusionInput, k: int) -> float:
    if inp.score is None or not np.isfinite(inp.score) or inp.score < 0.0:
        raise InvalidInputError(f"proposal {k} needs a finite non-negative score")
    return inp.score


def region_values(
    partition: RegionPartition,
    inputs: Sequence[FusionInput],
    method: str,
    seed: int = 0,
) -> list[tuple[Region, float, float]]:
    """(region, fused value, raw map value) for every closure region."""
    out = []
    for region in partition.regions:
        fused, raw = fuse_coverers(method, sorted(region.coverers), inputs, seed)
        out.append((region, fused, raw))
    return out


def _rescale(raw: np.ndarray, covered: np.ndarray) -> np.ndarray:
    loc = np.zeros_like(raw)
    values = raw[covered]
    if values.size == 0:
        return loc
    lo = float(values.min())
    hi = float(values.max())
    span = hi - lo
    if span <= _CONSTANT_SPAN * max(abs(hi), abs(lo)):
        return loc
    loc[covered] = (raw[covered] - lo) / span
    return loc


def build_loc_map(
    width: int,
    height: int,
    inputs: Sequence[FusionInput],
    method: str,
    seed: int = 0,
) -> LoCMap:
    """Assemble the per-pixel likelihood-of-change map for one query image."""
    if method not in METHODS:
        raise InvalidInputError(f"unknown method {method!r}")
    if not inputs:
        raise InvalidInputError("at least one proposal is required")
    for k, inp in enumerate(inputs):
        if not inp.box.within_frame(width, height):
            raise InvalidInputError(
                f"proposal {k} box {inp.box.as_tuple()} exceeds the {width}x{height} frame"
            )
        if method in SCORE_METHODS:
            _require_score(inp, k)
        else:
            _require_rank(inp, k)

    partition = intersection_closure([inp.box for inp in inputs])
    raw = np.zeros((height, width), dtype=np.float64)
    covered = np.zeros((height, width), dtype=bool)
    # Ascending coverer-count order: the smallest region containing a pixel
    # paints last, and its coverer set is exactly the pixel's coverer set.
    for region, _, value in region_values(partition, inputs, method, seed):
        b = region.box
        raw[b.y0 : b.y1, b.x0 : b.x1] = value
        covered[b.y0 : b.y1, b.x0 : b.x1] = True
    return LoCMap(method=method, loc=_rescale(raw, covered), covered=covered)


def qbb_loc_score(loc_map: LoCMap, box: BBox) -> float:
    """Mean likelihood-of-change over the covered pixels inside a box."""
    if not box.within_frame(loc_map.width, loc_map.height):
        raise InvalidInputError(
            f"box {box.as_tuple()} exceeds the {loc_map.width}x{loc_map.height} frame"
        )
    mask = loc_map.covered[box.y0 : box.y1, box.x0 : box.x1]
    if not mask.any():
        raise NoEvidenceError(f"box {box.as_tuple()} contains no covered pixels")
    return float(loc_map.loc[box.y0 : box.y1, box.x0 : box.x1][mask].mean())


def export_loc_map(loc_map: LoCMap, directory: str | Path, image_id: str) -> tuple[Path, Path]:
    """Write `<image_id>.<method>.loc.pgm` and `.cov.pgm` into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    loc_path = directory / f"{image_id}.{loc_map.method}.loc.pgm"
    cov_path = directory / f"{image_id}.{loc_map.method}.cov.pgm"
    quantized = np.floor(loc_map.loc * 255.0 + 0.5).astype(np.uint8)
    write_pgm(loc_path, quantized)
    write_pgm(cov_path, np.where(loc_map.covered, 255, 0).astype(np.uint8))
    return loc_path, cov_path
