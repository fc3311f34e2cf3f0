"""Seeded synthetic query/reference pair generator with planted changes.

Reference images are procedural: integer value-noise octaves with a color cast
plus a scatter of static shapes. The paired query is the reference translated by
a bounded jitter (edge-padded), brightness-shifted, and - for positive pairs -
altered inside one to three planted rectangles whose pixels are inverted, so the
changed area is exactly the annotated boxes. An emulated detector additionally
emits external-style proposals: tight boxes inside each planted change plus
background distractor boxes on both images.

All randomness derives from (seed, pair index, stream), and image synthesis uses
integer arithmetic only, so outputs are bit-reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .evaluation import NEGATIVE, POSITIVE, TestSample, write_manifest
from .geometry import BBox, EXTERNAL, Proposal, write_proposals_file
from .images import write_ppm

_STREAM_REFERENCE = 0
_STREAM_QUERY = 1
_STREAM_DETECTOR = 2
_STREAM_SHARED = 3

# scene mix: shared environment structure vs per-image detail
_SHARED_WEIGHT = 6
_INDIVIDUAL_WEIGHT = 2


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    image_size: int = 256
    n_pairs: int = 10
    change_rate: float = 0.5
    jitter_max: int = 6
    object_size_range: tuple[int, int] = (24, 56)
    texture_complexity: int = 3
    brightness_max: int = 18
    detector_boxes: bool = True

    def __post_init__(self) -> None:
        if self.image_size < 16:
            raise InvalidInputError(f"image_size must be at least 16, got {self.image_size}")
        if self.n_pairs < 0:
            raise InvalidInputError(f"n_pairs must be non-negative, got {self.n_pairs}")
        if not 0.0 <= self.change_rate <= 1.0:
            raise InvalidInputError(f"change_rate must be in [0, 1], got {self.change_rate}")
        if not 0 <= self.jitter_max < self.image_size / 4:
            raise InvalidInputError(
                f"jitter_max must be in [0, image_size/4), got {self.jitter_max}"
            )
        lo, hi = self.object_size_range
        if not (0 < lo <= hi < self.image_size):
            raise InvalidInputError(f"object sizes must fit the frame, got {self.object_size_range}")
        if self.texture_complexity < 1:
            raise InvalidInputError("texture_complexity must be positive")
        if self.brightness_max < 0:
            raise InvalidInputError("brightness_max must be non-negative")

    @property
    def n_positive(self) -> int:
        return int(np.floor(self.n_pairs * self.change_rate))


@dataclass
class PairSample:
    index: int
    reference: np.ndarray  # (S, S, 3) uint8
    query: np.ndarray  # (S, S, 3) uint8
    gt_boxes: tuple[BBox, ...]
    polarity: str
    jitter: tuple[int, int] = (0, 0)  # (dx, dy) applied to the query


@dataclass
class DatasetPaths:
    directory: Path
    manifest: Path
    proposals: Path | None


def ref_image_id(index: int) -> str:
    return f"ref_{index:04d}"


def query_image_id(index: int) -> str:
    return f"qry_{index:04d}"


def _rng(cfg: SynthConfig, index: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, index, stream]))


def _upsample_lattice(lattice: np.ndarray, size: int) -> np.ndarray:
    """Exact integer bilinear upsampling of an (n+1, n+1) lattice to size pixels."""
    n = lattice.shape[0] - 1
    t = np.arange(size, dtype=np.int64) * n
    idx = np.minimum(t // size, n - 1)
    frac = t - idx * size
    rows = lattice[idx] * (size - frac)[:, None] + lattice[idx + 1] * frac[:, None]
    cols = rows[:, idx] * (size - frac)[None, :] + rows[:, idx + 1] * frac[None, :]
    return cols // (size * size)


def _value_noise(rng: np.random.Generator, size: int, octaves: int) -> np.ndarray:
    acc = np.zeros((size, size), dtype=np.int64)
    weight_total = 0
    for o in range(octaves):
        cells = min(4 << o, size // 2)
        lattice = rng.integers(0, 256, size=(cells + 1, cells + 1), dtype=np.int64)
        weight = 1 << (octaves - 1 - o)
        acc += _upsample_lattice(lattice, size) * weight
        weight_total += weight
    return acc // weight_total


def _paint_static_shapes(rng: np.random.Generator, image: np.ndarray, count: int) -> None:
    size = image.shape[0]
    for _ in range(count):
        color = rng.integers(24, 232, size=3, dtype=np.int64)
        kind = int(rng.integers(0, 2))
        w = int(rng.integers(size // 12, size // 3))
        h = int(rng.integers(size // 12, size // 3))
        x = int(rng.integers(0, size - w))
        y = int(rng.integers(0, size - h))
        if kind == 0:
            image[y : y + h, x : x + w] = color
        else:
            r = min(w, h) // 2
            cx, cy = x + w // 2, y + h // 2
            yy, xx = np.ogrid[:size, :size]
            mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
            image[mask] = color


def _render_reference(cfg: SynthConfig, index: int) -> np.ndarray:
    # every image blends one dataset-wide scene with per-image structure, like
    # different viewpoints of a single environment; identity lives in the
    # coarse component only, so small crops are ambiguous across images while
    # whole-image appearance remains distinctive
    shared_rng = _rng(cfg, 0, _STREAM_SHARED)
    shared = _value_noise(shared_rng, cfg.image_size, cfg.texture_complexity)
    rng = _rng(cfg, index, _STREAM_REFERENCE)
    individual = _value_noise(rng, cfg.image_size, cfg.texture_complexity)
    base = (shared * _SHARED_WEIGHT + individual * _INDIVIDUAL_WEIGHT) // (
        _SHARED_WEIGHT + _INDIVIDUAL_WEIGHT
    )
    tint = rng.integers(-28, 29, size=3, dtype=np.int64)
    image = np.clip(base[:, :, None] + tint[None, None, :], 16, 239)
    image = image.astype(np.uint8)
    _paint_static_shapes(shared_rng, image, count=int(shared_rng.integers(6, 11)))
    _paint_static_shapes(rng, image, count=int(rng.integers(2, 5)))
    return image


def _shift_edge_pad(image: np.ndarray, dx: int, dy: int) -> np.ndarray:
    h, w = image.shape[:2]
    ys = np.clip(np.arange(h) - dy, 0, h - 1)
    xs = np.clip(np.arange(w) - dx, 0, w - 1)
    return image[np.ix_(ys, xs)]


def _place_disjoint_boxes(
    rng: np.random.Generator, cfg: SynthConfig, count: int
) -> list[BBox]:
    lo, hi = cfg.object_size_range
    size = cfg.image_size
    boxes: list[BBox] = []
    for _ in range(count):
        for _attempt in range(64):
            w = int(rng.integers(lo, hi + 1))
            h = int(rng.integers(lo, hi + 1))
            x = int(rng.integers(0, size - w))
            y = int(rng.integers(0, size - h))
            candidate = BBox(x, y, x + w, y + h)
            if all(
                candidate.x1 <= b.x0 or b.x1 <= candidate.x0
                or candidate.y1 <= b.y0 or b.y1 <= candidate.y0
                for b in boxes
            ):
                boxes.append(candidate)
                break
    return boxes


def gen_pair(cfg: SynthConfig, index: int) -> PairSample:
    """Generate one reference/query pair; deterministic in (cfg.seed, index)."""
    if not 0 <= index < max(cfg.n_pairs, 1):
        raise InvalidInputError(f"pair index {index} outside 0..{cfg.n_pairs - 1}")
    polarity = POSITIVE if index < cfg.n_positive else NEGATIVE
    reference = _render_reference(cfg, index)

    rng = _rng(cfg, index, _STREAM_QUERY)
    if cfg.jitter_max > 0:
        dx = int(rng.integers(-cfg.jitter_max, cfg.jitter_max + 1))
        dy = int(rng.integers(-cfg.jitter_max, cfg.jitter_max + 1))
    else:
        dx = dy = 0
    query = _shift_edge_pad(reference, dx, dy)
    if cfg.brightness_max > 0:
        # season proxy: a global offset plus a smooth illumination gradient,
        # so large subimages do not match their references exactly either
        delta = int(rng.integers(-cfg.brightness_max, cfg.brightness_max + 1))
        lattice = rng.integers(
            -cfg.brightness_max, cfg.brightness_max + 1, size=(4, 4), dtype=np.int64
        )
        field = _upsample_lattice(lattice * 256, cfg.image_size) // 256
        query = np.clip(
            query.astype(np.int64) + delta + field[:, :, None], 0, 255
        ).astype(np.uint8)
    else:
        query = query.copy()

    gt_boxes: tuple[BBox, ...] = ()
    if polarity == POSITIVE:
        count = int(rng.integers(1, 4))
        placed = _place_disjoint_boxes(rng, cfg, count)
        # one change style per pair: mixing styles in one image would let the
        # strong style dominate the per-image rescale and mask the weak one
        subtle = rng.random() < 0.5
        for b in placed:
            if subtle:
                _plant_subtle_object(query, b)
            else:
                _plant_solid_object(query, b)
        gt_boxes = tuple(placed)
    return PairSample(index, reference, query, gt_boxes, polarity, (dx, dy))


def _plant_solid_object(query: np.ndarray, box: BBox) -> None:
    """Overwrite a box with a solid object contrasting its surroundings.

    The fill value is dark on bright content and bright on dark content, so the
    object stays visible to intensity statistics. Pixels that happened to equal
    the fill are nudged by one level, which keeps the planted-change guarantee:
    every pixel inside the box differs from the unchanged image.
    """
    region = query[box.y0 : box.y1, box.x0 : box.x1]
    fill = np.uint8(12) if region.mean() >= 128.0 else np.uint8(243)
    nudged = np.uint8(fill + 1) if fill < 128 else np.uint8(fill - 1)
    query[box.y0 : box.y1, box.x0 : box.x1] = np.where(region == fill, nudged, fill)


def _plant_subtle_object(query: np.ndarray, box: BBox) -> None:
    """Shift a box's luminance away from its saturation side.

    Subtle changes keep the underlying texture, so a single subimage over the
    box may still localize tolerably; agreement among several covering
    subimages is what makes them detectable. The same every-pixel-differs
    guarantee holds: clipped pixels that would coincide are nudged one level.
    """
    region = query[box.y0 : box.y1, box.x0 : box.x1].astype(np.int16)
    delta = -32 if region.mean() >= 128.0 else 32
    shifted = np.clip(region + delta, 0, 255)
    # only clip-saturated pixels can coincide (at 0 or 255); nudge them inward
    equal = shifted == region
    shifted[equal] += -1 if delta > 0 else 1
    query[box.y0 : box.y1, box.x0 : box.x1] = shifted.astype(np.uint8)


def _scene_boxes(rng: np.random.Generator, cfg: SynthConfig, count: int) -> list[BBox]:
    lo, hi = cfg.object_size_range
    size = cfg.image_size
    out = []
    for _ in range(count):
        w = int(rng.integers(lo, hi + 1))
        h = int(rng.integers(lo, hi + 1))
        x = int(rng.integers(0, size - w))
        y = int(rng.integers(0, size - h))
        out.append(BBox(x, y, x + w, y + h))
    return out


def _perturb_box(rng: np.random.Generator, box: BBox, size: int, wobble: int = 2) -> BBox | None:
    """Detector localization noise: each edge moves by up to `wobble` pixels."""
    d = rng.integers(-wobble, wobble + 1, size=4)
    x0 = max(box.x0 + int(d[0]), 0)
    y0 = max(box.y0 + int(d[1]), 0)
    x1 = min(box.x1 + int(d[2]), size)
    y1 = min(box.y1 + int(d[3]), size)
    if x1 - x0 < 4 or y1 - y0 < 4:
        return None
    return BBox(x0, y0, x1, y1)


def _shift_box(box: BBox, dx: int, dy: int, size: int) -> BBox | None:
    x0 = max(box.x0 + dx, 0)
    y0 = max(box.y0 + dy, 0)
    x1 = min(box.x1 + dx, size)
    y1 = min(box.y1 + dy, size)
    if x1 - x0 < 4 or y1 - y0 < 4:
        return None
    return BBox(x0, y0, x1, y1)


def gen_detector_proposals(
    cfg: SynthConfig, pair: PairSample
) -> tuple[list[Proposal], list[Proposal]]:
    """Emulated detector output for (reference, query) of one pair.

    The detector sees the same scene twice, so most boxes correspond across
    the pair: reference boxes reappear on the query shifted by the pair's
    jitter, with per-edge localization wobble, occasional misses, and a few
    spurious query-only boxes. Planted changes additionally get a tight box
    fully inside the changed rectangle (change rate 1) and sometimes a loose
    one around it. Some confidences fall below the default ingestion threshold.
    """
    rng = _rng(cfg, pair.index, _STREAM_DETECTOR)
    size = cfg.image_size
    dx, dy = pair.jitter

    ref_props: list[Proposal] = []
    query_props: list[Proposal] = []
    for box in _scene_boxes(rng, cfg, int(rng.integers(6, 11))):
        confidence = round(0.01 + 0.69 * float(rng.random()), 4)
        ref_box = _perturb_box(rng, box, size)
        if ref_box is not None:
            ref_props.append(Proposal(ref_box, EXTERNAL, confidence))
        # the detector re-finds the (moved) content unless it misses
        if rng.random() < 0.85:
            moved = _shift_box(box, dx, dy, size)
            if moved is not None:
                query_box = _perturb_box(rng, moved, size)
                if query_box is not None:
                    q_conf = round(0.01 + 0.69 * float(rng.random()), 4)
                    query_props.append(Proposal(query_box, EXTERNAL, q_conf))

    # spurious query-only detections: no reference counterpart exists, so
    # their self-localization is near-random
    for _ in range(int(rng.integers(4, 9))):
        spurious = _scene_boxes(rng, cfg, 1)[0]
        query_props.append(Proposal(spurious, EXTERNAL, round(0.01 + 0.49 * float(rng.random()), 4)))

    for b in pair.gt_boxes:
        # novel objects attract several overlapping detections, which is what
        # lets fused coverers agree on a change
        for _ in range(int(rng.integers(2, 5))):
            inset = min(int(rng.integers(2, 6)), (min(b.width, b.height) - 2) // 2)
            shift = int(rng.integers(-(inset - 1), inset)) if inset > 1 else 0
            tight = BBox(
                max(b.x0 + inset + shift, 0),
                max(b.y0 + inset + shift, 0),
                min(b.x1 - inset + shift, size),
                min(b.y1 - inset + shift, size),
            )
            confidence = round(0.30 + 0.65 * float(rng.random()), 4)
            query_props.append(Proposal(tight, EXTERNAL, confidence))
        if rng.random() < 0.5:
            grow_x = int(rng.integers(b.width // 6, b.width // 2 + 1))
            grow_y = int(rng.integers(b.height // 6, b.height // 2 + 1))
            loose = BBox(
                max(b.x0 - grow_x, 0),
                max(b.y0 - grow_y, 0),
                min(b.x1 + grow_x, size),
                min(b.y1 + grow_y, size),
            )
            query_props.append(Proposal(loose, EXTERNAL, round(0.10 + 0.50 * float(rng.random()), 4)))
    return ref_props, query_props


def gen_dataset(cfg: SynthConfig, out_dir: str | Path) -> DatasetPaths:
    """Write rasters, the dataset manifest, and (optionally) detector proposals."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples: list[TestSample] = []
    proposals: dict[str, list[Proposal]] = {}
    for index in range(cfg.n_pairs):
        pair = gen_pair(cfg, index)
        rid, qid = ref_image_id(index), query_image_id(index)
        write_ppm(out_dir / f"{rid}.ppm", pair.reference)
        write_ppm(out_dir / f"{qid}.ppm", pair.query)
        samples.append(TestSample(qid, rid, pair.gt_boxes, pair.polarity))
        if cfg.detector_boxes:
            ref_props, query_props = gen_detector_proposals(cfg, pair)
            proposals[rid] = ref_props
            proposals[qid] = query_props
    manifest = out_dir / "manifest.jsonl"
    write_manifest(manifest, samples)
    proposals_path: Path | None = None
    if cfg.detector_boxes:
        proposals_path = out_dir / "proposals.jsonl"
        write_proposals_file(proposals_path, proposals)
    return DatasetPaths(out_dir, manifest, proposals_path)
