"""Axis-aligned pixel rectangles, subimage proposals, and overlap-region closure."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import FormatError, InvalidInputError

GRID = "grid"
EXTERNAL = "external"
SOURCES = (GRID, EXTERNAL)

DEFAULT_CONFIDENCE_THRESHOLD = 0.05


@dataclass(frozen=True, order=True)
class BBox:
    """Half-open integer rectangle: (px, py) is inside iff x0 <= px < x1 and y0 <= py < y1."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self) -> None:
        for name in ("x0", "y0", "x1", "y1"):
            v = getattr(self, name)
            iv = int(v)
            if iv != v:
                raise InvalidInputError(f"box coordinate {name}={v!r} is not an integer")
            object.__setattr__(self, name, iv)
        if self.x0 < 0 or self.y0 < 0:
            raise InvalidInputError(f"box origin must be non-negative: {self.as_tuple()}")
        if self.x0 >= self.x1 or self.y0 >= self.y1:
            raise InvalidInputError(f"box must have positive area: {self.as_tuple()}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def contains_point(self, x: int, y: int) -> bool:
        return self.x0 <= x < self.x1 and self.y0 <= y < self.y1

    def contains_box(self, other: "BBox") -> bool:
        return (
            self.x0 <= other.x0
            and self.y0 <= other.y0
            and other.x1 <= self.x1
            and other.y1 <= self.y1
        )

    def within_frame(self, width: int, height: int) -> bool:
        return self.x1 <= width and self.y1 <= height

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x0, self.y0, self.x1, self.y1)


@dataclass(frozen=True)
class Proposal:
    """A subimage proposal: a box plus its origin and detector confidence."""

    box: BBox
    source: str = GRID
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise InvalidInputError(f"unknown proposal source {self.source!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidInputError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class Region:
    """A closure region together with the original proposals covering all of it."""

    box: BBox
    coverers: frozenset[int]

    @property
    def n(self) -> int:
        return len(self.coverers)


@dataclass(frozen=True)
class RegionPartition:
    """Closure of a proposal set under pairwise intersection, with coverer sets."""

    regions: tuple[Region, ...]


def five_box_proposals(width: int, height: int) -> list[Proposal]:
    """The five fixed boxes covering center, and the four two-thirds corners.

    Thirds are floored to integer pixel coordinates.
    """
    if width < 3 or height < 3:
        raise InvalidInputError(f"image must be at least 3x3, got {width}x{height}")
    x1, x2 = width // 3, (2 * width) // 3
    y1, y2 = height // 3, (2 * height) // 3
    boxes = [
        BBox(x1, y1, x2, y2),
        BBox(0, 0, x2, y2),
        BBox(x1, 0, width, y2),
        BBox(0, y1, x2, height),
        BBox(x1, y1, width, height),
    ]
    return [Proposal(b, GRID, 1.0) for b in boxes]


def intersect(a: BBox, b: BBox) -> BBox | None:
    """Maximal rectangle contained in both boxes, or None when the overlap is empty."""
    x0 = max(a.x0, b.x0)
    y0 = max(a.y0, b.y0)
    x1 = min(a.x1, b.x1)
    y1 = min(a.y1, b.y1)
    if x0 >= x1 or y0 >= y1:
        return None
    return BBox(x0, y0, x1, y1)


def _as_box(p: Proposal | BBox) -> BBox:
    return p.box if isinstance(p, Proposal) else p


def intersection_closure(proposals: Sequence[Proposal | BBox]) -> RegionPartition:
    """Close a proposal set under pairwise intersection.

    Duplicate boxes coalesce into one region. Each region carries the index set
    of every original proposal that contains it entirely; regions are ordered by
    ascending coverer count, so painting them in order leaves every pixel with
    the value of the smallest region containing it.
    """
    boxes = [_as_box(p) for p in proposals]
    if not boxes:
        raise InvalidInputError("at least one proposal is required")

    closed: set[BBox] = set(boxes)
    all_boxes = list(dict.fromkeys(boxes))
    frontier = list(all_boxes)
    while frontier:
        fresh: list[BBox] = []
        for a in frontier:
            for b in all_boxes:
                c = intersect(a, b)
                if c is not None and c not in closed:
                    closed.add(c)
                    fresh.append(c)
        all_boxes.extend(fresh)
        frontier = fresh

    regions = []
    for box in all_boxes:
        coverers = frozenset(i for i, b in enumerate(boxes) if b.contains_box(box))
        regions.append(Region(box, coverers))
    regions.sort(key=lambda r: (r.n, tuple(sorted(r.coverers)), r.box))
    return RegionPartition(tuple(regions))


def coverers_at(pixel: tuple[int, int], proposals: Sequence[Proposal | BBox]) -> frozenset[int]:
    """Indices of the proposals whose box contains the pixel (possibly empty)."""
    x, y = pixel
    return frozenset(i for i, p in enumerate(proposals) if _as_box(p).contains_point(x, y))


def write_proposals_file(
    path: str | Path, proposals_by_image: Mapping[str, Sequence[Proposal]]
) -> None:
    """Write one JSON record per image, sorted by image id, one record per line."""
    lines = []
    for image_id in sorted(proposals_by_image):
        record = {
            "image_id": image_id,
            "proposals": [
                {
                    "x0": p.box.x0,
                    "y0": p.box.y0,
                    "x1": p.box.x1,
                    "y1": p.box.y1,
                    "confidence": p.confidence,
                    "source": p.source,
                }
                for p in proposals_by_image[image_id]
            ],
        }
        lines.append(json.dumps(record, sort_keys=True))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def load_proposals_file(
    path: str | Path,
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
) -> dict[str, list[Proposal]]:
    """Load proposal records; external proposals below the threshold are dropped."""
    path = Path(path)
    result: dict[str, list[Proposal]] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}:{lineno}: invalid JSON: {e}") from e
        if not isinstance(record, dict) or "image_id" not in record or "proposals" not in record:
            raise FormatError(f"{path}:{lineno}: record needs image_id and proposals fields")
        image_id = record["image_id"]
        if image_id in result:
            raise FormatError(f"{path}:{lineno}: duplicate record for image {image_id!r}")
        kept: list[Proposal] = []
        for k, entry in enumerate(record["proposals"]):
            try:
                prop = Proposal(
                    box=BBox(entry["x0"], entry["y0"], entry["x1"], entry["y1"]),
                    source=entry.get("source", EXTERNAL),
                    confidence=float(entry.get("confidence", 1.0)),
                )
            except (KeyError, TypeError, InvalidInputError) as e:
                raise FormatError(f"{path}:{lineno}: proposal {k}: {e}") from e
            if prop.source == EXTERNAL and prop.confidence < confidence_threshold:
                continue
            kept.append(prop)
        result[image_id] = kept
    return result
