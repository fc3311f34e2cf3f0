"""Reference-subimage database and exact nearest-neighbor ranking.

Retrieval is deliberately brute force: every query is compared against every
database entry with the L2 distance, which keeps results exact and
deterministic at the scales this package targets. Ties are broken by ascending
entry id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .descriptor import (
    DescriptorConfig,
    ExternalFeatures,
    extract_builtin,
    read_feature_records,
    write_feature_file,
)
from .errors import FormatError, InvalidInputError, MissingGroundTruthError
from .geometry import BBox, Proposal


@dataclass
class ReferenceDB:
    """Immutable store of reference subimage descriptors.

    Entry ids are dense 0..L-1 in build order: sorted by reference image id,
    then by proposal order within each image.
    """

    ref_image_ids: tuple[str, ...]
    boxes: tuple[BBox, ...]
    features: np.ndarray  # (L, D) float64, unit rows

    def __post_init__(self) -> None:
        if len(self.ref_image_ids) != len(self.boxes) or len(self.boxes) != self.features.shape[0]:
            raise InvalidInputError("database columns must have equal length")
        if self.features.ndim != 2 or self.features.shape[0] == 0:
            raise InvalidInputError("database needs at least one entry")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dimension(self) -> int:
        return int(self.features.shape[1])

    def has_image(self, image_id: str) -> bool:
        return image_id in self.ref_image_ids


@dataclass(frozen=True)
class RankedList:
    """All database entries ordered by ascending distance to one query subimage."""

    entry_ids: np.ndarray  # (L,) int64
    distances: np.ndarray  # (L,) float64, non-decreasing

    def __len__(self) -> int:
        return int(self.entry_ids.shape[0])


@dataclass(frozen=True)
class GroundTruthRank:
    """Position of the first entry belonging to the expected reference image."""

    raw: int
    length: int

    @property
    def normalized(self) -> float:
        return self.raw / self.length


def build_db(
    images: Mapping[str, np.ndarray],
    proposals_by_image: Mapping[str, Sequence[Proposal]],
    cfg: DescriptorConfig = DescriptorConfig(),
    external: ExternalFeatures | None = None,
) -> ReferenceDB:
    """Build the database from reference images and their proposals.

    With `external` set, vectors come from the feature map and every
    (image, box) must be present; otherwise the built-in descriptor runs.
    """
    ids: list[str] = []
    boxes: list[BBox] = []
    vecs: list[np.ndarray] = []
    for image_id in sorted(images):
        for prop in proposals_by_image.get(image_id, ()):
            if external is not None:
                vec = external.lookup(image_id, prop.box)
            else:
                vec = extract_builtin(images[image_id], prop.box, cfg)
            ids.append(image_id)
            boxes.append(prop.box)
            vecs.append(vec)
    if not vecs:
        raise InvalidInputError("reference set produced no subimages")
    dims = {v.shape[0] for v in vecs}
    if len(dims) != 1:
        raise FormatError(f"inconsistent feature dimensions in reference set: {sorted(dims)}")
    return ReferenceDB(tuple(ids), tuple(boxes), np.vstack(vecs))


def rank(query: np.ndarray, db: ReferenceDB) -> RankedList:
    """Order every database entry by ascending L2 distance to the query vector."""
    q = np.asarray(query, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != db.dimension:
        raise InvalidInputError(
            f"query dimension {q.shape} does not match database dimension {db.dimension}"
        )
    diffs = db.features - q
    dist = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    order = np.argsort(dist, kind="stable")
    return RankedList(order.astype(np.int64), dist[order])


def gt_rank(ranked: RankedList, gt_image_id: str, db: ReferenceDB) -> GroundTruthRank:
    """1-based position of the first entry whose reference image is the expected one."""
    ids = np.asarray(db.ref_image_ids, dtype=object)
    hits = np.nonzero(ids[ranked.entry_ids] == gt_image_id)[0]
    if hits.shape[0] == 0:
        raise MissingGroundTruthError(f"image {gt_image_id!r} has no database entries")
    return GroundTruthRank(raw=int(hits[0]) + 1, length=len(ranked))


def gt_best_distance(ranked: RankedList, gt_image_id: str, db: ReferenceDB) -> float:
    """Smallest distance from the query to any entry of the expected image."""
    position = gt_rank(ranked, gt_image_id, db)
    return float(ranked.distances[position.raw - 1])


def save_db(db: ReferenceDB, directory: str | Path, name: str = "db") -> tuple[Path, Path]:
    """Persist the database as a feature file plus an entry-order manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    features_path = directory / f"{name}.features.bin"
    manifest_path = directory / f"{name}.manifest.jsonl"
    write_feature_file(
        features_path,
        [(db.ref_image_ids[i], db.boxes[i], db.features[i]) for i in range(len(db))],
    )
    lines = [
        json.dumps(
            {"entry_id": i, "ref_image_id": db.ref_image_ids[i], "box": list(db.boxes[i].as_tuple())},
            sort_keys=True,
        )
        for i in range(len(db))
    ]
    manifest_path.write_text("\n".join(lines) + "\n")
    return features_path, manifest_path


def load_db(directory: str | Path, name: str = "db") -> ReferenceDB:
    """Reload a persisted database, checking the manifest matches entry order."""
    directory = Path(directory)
    features_path = directory / f"{name}.features.bin"
    manifest_path = directory / f"{name}.manifest.jsonl"
    records, _ = read_feature_records(features_path)
    manifest_lines = [
        json.loads(line) for line in manifest_path.read_text().splitlines() if line.strip()
    ]
    if len(manifest_lines) != len(records):
        raise FormatError(
            f"{manifest_path}: {len(manifest_lines)} manifest entries for {len(records)} records"
        )
    for i, (entry, (image_id, box, _)) in enumerate(zip(manifest_lines, records)):
        if (
            entry.get("entry_id") != i
            or entry.get("ref_image_id") != image_id
            or tuple(entry.get("box", ())) != box.as_tuple()
        ):
            raise FormatError(f"{manifest_path}: entry {i} disagrees with the feature file")
    return ReferenceDB(
        tuple(r[0] for r in records),
        tuple(r[1] for r in records),
        np.vstack([r[2] for r in records]),
    )
