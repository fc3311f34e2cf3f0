"""Difficulty-controlled test-set labeling and interpolated average precision.

Two per-box difficulty indices drive labeling: the fraction of a box covered by
ground-truth change (its change rate) and the fraction of the image the box
occupies (its relative size). Boxes inside the positive intervals become
"change" samples, boxes inside the negative intervals become "no_change", and
everything else is excluded from the test set. Labeled boxes scored by a
detection method are then summarized with 101-point interpolated average
precision, swept over the negative-side change-rate ceiling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, InvalidInputError, UndefinedMetricError
from .geometry import BBox, intersect

POSITIVE = "positive"
NEGATIVE = "negative"
POLARITIES = (POSITIVE, NEGATIVE)

CHANGE = "change"
NO_CHANGE = "no_change"
EXCLUDED = "excluded"

DEFAULT_ROC_NEG_MAX_SWEEP = (0.01, 0.02, 0.03, 0.04, 0.05)

_RECALL_POINTS = np.arange(101, dtype=np.float64) / 100.0


@dataclass(frozen=True)
class TestSample:
    """One query/reference pairing with its change annotations."""

    __test__ = False  # not a pytest class despite the name

    query_image_id: str
    gt_ref_image_id: str
    gt_change_boxes: tuple[BBox, ...]
    polarity: str

    def __post_init__(self) -> None:
        if self.polarity not in POLARITIES:
            raise InvalidInputError(f"unknown polarity {self.polarity!r}")
        if self.polarity == POSITIVE and not self.gt_change_boxes:
            raise InvalidInputError(f"positive sample {self.query_image_id!r} needs change boxes")
        if self.polarity == NEGATIVE and self.gt_change_boxes:
            raise InvalidInputError(f"negative sample {self.query_image_id!r} must have no boxes")


def _check_interval(name: str, interval: tuple[float, float]) -> None:
    lo, hi = interval
    if not (0.0 <= lo <= hi <= 1.0):
        raise InvalidInputError(f"{name} must satisfy 0 <= min <= max <= 1, got {interval}")


@dataclass(frozen=True)
class DifficultyConfig:
    """Inclusion intervals for the two difficulty indices, per label polarity."""

    roc_pos: tuple[float, float] = (0.9, 1.0)
    roc_neg: tuple[float, float] = (0.0, 0.05)
    sob_pos: tuple[float, float] = (0.0, 0.4)
    sob_neg: tuple[float, float] = (0.4, 1.0)

    def __post_init__(self) -> None:
        _check_interval("roc_pos", self.roc_pos)
        _check_interval("roc_neg", self.roc_neg)
        _check_interval("sob_pos", self.sob_pos)
        _check_interval("sob_neg", self.sob_neg)
        if self.roc_neg[1] >= self.roc_pos[0]:
            raise InvalidInputError(
                f"need a gap between the label intervals: "
                f"roc_neg_max {self.roc_neg[1]} >= roc_pos_min {self.roc_pos[0]}"
            )

    def with_roc_neg_max(self, value: float) -> "DifficultyConfig":
        return replace(self, roc_neg=(self.roc_neg[0], value))


def roc(box: BBox, gt_boxes: Sequence[BBox]) -> float:
    """Fraction of the box covered by the union of ground-truth change boxes."""
    overlaps = [c for g in gt_boxes if (c := intersect(box, g)) is not None]
    if not overlaps:
        return 0.0
    xs = sorted({v for c in overlaps for v in (c.x0, c.x1)})
    ys = sorted({v for c in overlaps for v in (c.y0, c.y1)})
    union = 0
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            cx, cy = xs[i], ys[j]
            if any(c.contains_point(cx, cy) for c in overlaps):
                union += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j])
    return union / box.area


def sob(box: BBox, width: int, height: int) -> float:
    """Box area as a fraction of the image area."""
    if not box.within_frame(width, height):
        raise InvalidInputError(f"box {box.as_tuple()} exceeds the {width}x{height} frame")
    return box.area / (width * height)


def label_qbb(roc_value: float, sob_value: float, polarity: str, cfg: DifficultyConfig) -> str:
    """Assign change / no_change / excluded from the difficulty intervals.

    The thresholds alone decide the label; `polarity` travels with the sample
    for bookkeeping (negative samples have no change boxes, so their boxes can
    never reach the positive interval).
    """
    if polarity not in POLARITIES:
        raise InvalidInputError(f"unknown polarity {polarity!r}")
    if cfg.roc_pos[0] <= roc_value <= cfg.roc_pos[1] and cfg.sob_pos[0] <= sob_value <= cfg.sob_pos[1]:
        return CHANGE
    if cfg.roc_neg[0] <= roc_value <= cfg.roc_neg[1] and cfg.sob_neg[0] <= sob_value <= cfg.sob_neg[1]:
        return NO_CHANGE
    return EXCLUDED


def ap_101(scored: Sequence[tuple[float, bool]]) -> float:
    """101-point interpolated average precision.

    Samples are sorted by descending score with ties kept in input order. The
    interpolated precision at recall r is the maximum precision over all
    cutoffs reaching recall >= r; the result averages it over the 101 recall
    points 0.00, 0.01, ..., 1.00.
    """
    if not scored:
        raise UndefinedMetricError("average precision needs at least one sample")
    scores = np.array([s for s, _ in scored], dtype=np.float64)
    labels = np.array([bool(l) for _, l in scored], dtype=bool)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise UndefinedMetricError("average precision is undefined without positives")
    order = np.argsort(-scores, kind="stable")
    tp = np.cumsum(labels[order])
    cutoffs = np.arange(1, len(scored) + 1, dtype=np.float64)
    precision = tp / cutoffs
    recall = tp / n_pos
    # precision envelope: best precision at any cutoff from here on
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, _RECALL_POINTS, side="left")
    return float(envelope[idx].mean())


@dataclass(frozen=True)
class ScoredQBB:
    """One detection-scored box on a query image."""

    box: BBox
    score: float


@dataclass
class SampleDetections:
    """Everything evaluation needs about one test sample."""

    sample: TestSample
    width: int
    height: int
    qbbs_by_method: dict[str, list[ScoredQBB]] = field(default_factory=dict)


@dataclass
class Report:
    """AP per method and per negative-ceiling value, in table shape."""

    methods: tuple[str, ...]
    sweep: tuple[float, ...]
    ap: dict[tuple[str, float], float]

    def to_csv(self) -> str:
        header = "method," + ",".join(_format_sweep(v) for v in self.sweep)
        rows = [header]
        for method in self.methods:
            cells = ",".join(f"{self.ap[(method, v)]:.2f}" for v in self.sweep)
            rows.append(f"{method},{cells}")
        return "\n".join(rows) + "\n"


def _format_sweep(value: float) -> str:
    text = f"{value:g}"
    return text


def evaluate_methods(
    detections: Sequence[SampleDetections],
    methods: Sequence[str],
    sweep: Sequence[float] = DEFAULT_ROC_NEG_MAX_SWEEP,
    cfg: DifficultyConfig = DifficultyConfig(),
) -> Report:
    """Label every scored box under each sweep value and compute per-method AP."""
    if not methods:
        raise InvalidInputError("at least one method is required")
    if not detections:
        raise InvalidInputError("at least one sample is required")
    for v in sweep:
        cfg.with_roc_neg_max(v)  # validates the swept interval

    indexed = []
    for det in detections:
        sample = det.sample
        for method in methods:
            if method not in det.qbbs_by_method:
                raise InvalidInputError(
                    f"sample {sample.query_image_id!r} has no detections for method {method!r}"
                )
        per_box = {}
        for method in methods:
            rows = []
            for qbb in det.qbbs_by_method[method]:
                key = qbb.box.as_tuple()
                if key not in per_box:
                    try:
                        per_box[key] = (
                            roc(qbb.box, sample.gt_change_boxes),
                            sob(qbb.box, det.width, det.height),
                        )
                    except InvalidInputError as e:
                        raise InvalidInputError(f"sample {sample.query_image_id!r}: {e}") from e
                rows.append((per_box[key], qbb.score))
            indexed.append(((sample.polarity, method), rows))

    ap: dict[tuple[str, float], float] = {}
    for v in sweep:
        cfg_v = cfg.with_roc_neg_max(v)
        for method in methods:
            scored: list[tuple[float, bool]] = []
            for (polarity, m), rows in indexed:
                if m != method:
                    continue
                for (roc_v, sob_v), score in rows:
                    label = label_qbb(roc_v, sob_v, polarity, cfg_v)
                    if label == CHANGE:
                        scored.append((score, True))
                    elif label == NO_CHANGE:
                        scored.append((score, False))
            try:
                ap[(method, v)] = ap_101(scored)
            except UndefinedMetricError as e:
                raise UndefinedMetricError(
                    f"method {method!r} at roc_neg_max {v}: {e}"
                ) from e
    return Report(tuple(methods), tuple(sweep), ap)


def write_manifest(path: str | Path, samples: Sequence[TestSample]) -> None:
    """Write the dataset manifest: one JSON record per sample, one per line."""
    lines = []
    for s in samples:
        lines.append(
            json.dumps(
                {
                    "query_image_id": s.query_image_id,
                    "gt_ref_image_id": s.gt_ref_image_id,
                    "polarity": s.polarity,
                    "gt_boxes": [list(b.as_tuple()) for b in s.gt_change_boxes],
                },
                sort_keys=True,
            )
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_manifest(path: str | Path) -> list[TestSample]:
    """Load the dataset manifest written by `write_manifest`."""
    path = Path(path)
    samples = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            samples.append(
                TestSample(
                    query_image_id=record["query_image_id"],
                    gt_ref_image_id=record["gt_ref_image_id"],
                    gt_change_boxes=tuple(BBox(*b) for b in record["gt_boxes"]),
                    polarity=record["polarity"],
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, InvalidInputError) as e:
            raise FormatError(f"{path}:{lineno}: {e}") from e
    return samples
