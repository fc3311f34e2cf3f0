"""Staged batch pipeline: synthesize data, index references, detect, evaluate.

Every stage persists its artifacts (database, per-box score records, maps,
report) so stages can run and be tested independently. Commands are pure
functions of (config, inputs, seeds): reruns produce byte-identical files.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import fusion
from .descriptor import (
    DescriptorConfig,
    ExternalFeatures,
    extract_builtin,
    load_external_features,
    to_storage_precision,
)
from .errors import InvalidInputError, MissingGroundTruthError
from .evaluation import (
    DEFAULT_ROC_NEG_MAX_SWEEP,
    DifficultyConfig,
    Report,
    SampleDetections,
    ScoredQBB,
    TestSample,
    evaluate_methods,
    read_manifest,
)
from .geometry import (
    DEFAULT_CONFIDENCE_THRESHOLD,
    EXTERNAL,
    GRID,
    BBox,
    Proposal,
    five_box_proposals,
    intersection_closure,
    load_proposals_file,
)
from .images import read_ppm
from .retrieval import ReferenceDB, build_db, gt_rank, load_db, rank, save_db
from .synth import SynthConfig, gen_dataset

MERGED_ENGINE = "all"


@dataclass
class PipelineConfig:
    dataset_dir: Path
    out_dir: Path
    descriptor: DescriptorConfig = DescriptorConfig()
    grid_proposals: bool = True
    external_proposals: Path | None = None
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    external_features: Path | None = None
    split_by_source: bool = False
    methods: tuple[str, ...] = fusion.METHODS
    difficulty: DifficultyConfig = DifficultyConfig()
    roc_neg_max_sweep: tuple[float, ...] = DEFAULT_ROC_NEG_MAX_SWEEP
    seed: int = 0
    workers: int = 4
    synth: SynthConfig = field(default_factory=SynthConfig)

    def __post_init__(self) -> None:
        self.dataset_dir = Path(self.dataset_dir)
        self.out_dir = Path(self.out_dir)
        if self.external_proposals is not None:
            self.external_proposals = Path(self.external_proposals)
        if self.external_features is not None:
            self.external_features = Path(self.external_features)
        unknown = [m for m in self.methods if m not in fusion.METHODS]
        if unknown:
            raise InvalidInputError(f"unknown methods: {unknown}")
        if self.workers < 1:
            raise InvalidInputError(f"workers must be positive, got {self.workers}")

    @property
    def manifest_path(self) -> Path:
        return self.dataset_dir / "manifest.jsonl"

    def image_path(self, image_id: str) -> Path:
        return self.dataset_dir / f"{image_id}.ppm"


def load_config(path: str | Path) -> PipelineConfig:
    """Parse the JSON config file; unknown keys are rejected."""
    path = Path(path)
    raw = json.loads(path.read_text())
    known = {
        "dataset_dir",
        "out_dir",
        "descriptor",
        "proposals",
        "retrieval",
        "methods",
        "difficulty",
        "evaluation",
        "seed",
        "workers",
        "synth",
    }
    unknown = set(raw) - known
    if unknown:
        raise InvalidInputError(f"{path}: unknown config keys: {sorted(unknown)}")
    descriptor = DescriptorConfig(**raw.get("descriptor", {}))
    proposals = raw.get("proposals", {})
    retrieval_cfg = raw.get("retrieval", {})
    difficulty_raw = {k: tuple(v) for k, v in raw.get("difficulty", {}).items()}
    evaluation_cfg = raw.get("evaluation", {})
    synth_raw = dict(raw.get("synth", {}))
    if "object_size_range" in synth_raw:
        synth_raw["object_size_range"] = tuple(synth_raw["object_size_range"])
    return PipelineConfig(
        dataset_dir=Path(raw["dataset_dir"]),
        out_dir=Path(raw["out_dir"]),
        descriptor=descriptor,
        grid_proposals=bool(proposals.get("grid", True)),
        external_proposals=(
            Path(proposals["external_file"]) if proposals.get("external_file") else None
        ),
        confidence_threshold=float(
            proposals.get("confidence_threshold", DEFAULT_CONFIDENCE_THRESHOLD)
        ),
        external_features=(
            Path(retrieval_cfg["external_features"])
            if retrieval_cfg.get("external_features")
            else None
        ),
        split_by_source=bool(retrieval_cfg.get("split_by_source", False)),
        methods=tuple(raw.get("methods", fusion.METHODS)),
        difficulty=DifficultyConfig(**difficulty_raw),
        roc_neg_max_sweep=tuple(
            evaluation_cfg.get("roc_neg_max_sweep", DEFAULT_ROC_NEG_MAX_SWEEP)
        ),
        seed=int(raw.get("seed", 0)),
        workers=int(raw.get("workers", 4)),
        synth=SynthConfig(**synth_raw),
    )


def _proposals_for(cfg: PipelineConfig, image_id: str, width: int, height: int,
                   external: dict[str, list[Proposal]]) -> list[Proposal]:
    props: list[Proposal] = []
    if cfg.grid_proposals:
        props.extend(five_box_proposals(width, height))
    props.extend(external.get(image_id, ()))
    if not props:
        raise InvalidInputError(f"image {image_id!r} has no proposals")
    return props


def _load_external_proposals(cfg: PipelineConfig) -> dict[str, list[Proposal]]:
    if cfg.external_proposals is None:
        return {}
    return load_proposals_file(cfg.external_proposals, cfg.confidence_threshold)


def _engine_for(source: str, split: bool) -> str:
    return source if split else MERGED_ENGINE


def _load_features_map(cfg: PipelineConfig) -> ExternalFeatures | None:
    if cfg.external_features is None:
        return None
    return load_external_features(cfg.external_features)


@dataclass
class StageTiming:
    name: str
    milliseconds: float


def cmd_synth(cfg: PipelineConfig) -> Path:
    """Generate the synthetic dataset into the configured dataset directory."""
    started = time.perf_counter()
    paths = gen_dataset(cfg.synth, cfg.dataset_dir)
    _report_timing([StageTiming("synth", (time.perf_counter() - started) * 1e3)])
    return paths.manifest


def cmd_index(cfg: PipelineConfig) -> dict[str, ReferenceDB]:
    """Build and persist the reference database(s) from the dataset manifest."""
    started = time.perf_counter()
    samples = read_manifest(cfg.manifest_path)
    ref_ids = sorted({s.gt_ref_image_id for s in samples})
    if not ref_ids:
        raise InvalidInputError(f"{cfg.manifest_path}: manifest lists no reference images")
    external_props = _load_external_proposals(cfg)
    features_map = _load_features_map(cfg)

    images = {}
    for rid in ref_ids:
        path = cfg.image_path(rid)
        if not path.exists():
            raise InvalidInputError(f"missing reference image file: {path}")
        images[rid] = read_ppm(path)

    by_engine: dict[str, dict[str, list[Proposal]]] = {}
    for rid in ref_ids:
        h, w = images[rid].shape[:2]
        for prop in _proposals_for(cfg, rid, w, h, external_props):
            engine = _engine_for(prop.source, cfg.split_by_source)
            by_engine.setdefault(engine, {}).setdefault(rid, []).append(prop)

    dbs: dict[str, ReferenceDB] = {}
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for engine in sorted(by_engine):
        db = build_db(images, by_engine[engine], cfg.descriptor, features_map)
        save_db(db, cfg.out_dir, name=f"db_{engine}")
        dbs[engine] = db
    _report_timing([StageTiming("index", (time.perf_counter() - started) * 1e3)])
    return dbs


def _load_dbs(cfg: PipelineConfig) -> dict[str, ReferenceDB]:
    engines = [GRID, EXTERNAL] if cfg.split_by_source else [MERGED_ENGINE]
    dbs = {}
    for engine in engines:
        if (cfg.out_dir / f"db_{engine}.features.bin").exists():
            dbs[engine] = load_db(cfg.out_dir, name=f"db_{engine}")
    if not dbs:
        raise InvalidInputError(f"no persisted database found under {cfg.out_dir}")
    return dbs


@dataclass
class DetectionResult:
    query_image_id: str
    records_by_method: dict[str, list[dict]]
    error: str | None = None


def _detect_one(
    cfg: PipelineConfig,
    sample: TestSample,
    dbs: dict[str, ReferenceDB],
    external_props: dict[str, list[Proposal]],
    features_map: ExternalFeatures | None,
    methods: Sequence[str],
) -> DetectionResult:
    qid = sample.query_image_id
    inputs: list[fusion.FusionInput] = []
    try:
        image = read_ppm(cfg.image_path(qid))
        height, width = image.shape[:2]
        props = _proposals_for(cfg, qid, width, height, external_props)
        for prop in props:
            engine = _engine_for(prop.source, cfg.split_by_source)
            if engine not in dbs:
                raise InvalidInputError(f"no database for proposal source {prop.source!r}")
            db = dbs[engine]
            if features_map is not None:
                vec = features_map.lookup(qid, prop.box)
            else:
                # match the f32 precision of reloaded database vectors, so an
                # unchanged subimage ranks at distance exactly zero
                vec = to_storage_precision(extract_builtin(image, prop.box, cfg.descriptor))
            ranked = rank(vec, db)
            position = gt_rank(ranked, sample.gt_ref_image_id, db)
            inputs.append(
                fusion.FusionInput(
                    box=prop.box,
                    rank=position.normalized,
                    score=float(ranked.distances[position.raw - 1]),
                )
            )
    except (MissingGroundTruthError, InvalidInputError, OSError) as e:
        return DetectionResult(qid, {}, error=str(e))

    partition = intersection_closure([inp.box for inp in inputs])
    records_by_method: dict[str, list[dict]] = {}
    maps_dir = cfg.out_dir / "maps"
    for method in methods:
        loc_map = fusion.build_loc_map(width, height, inputs, method, seed=cfg.seed)
        fusion.export_loc_map(loc_map, maps_dir, qid)
        records = []
        for region, fused, _raw in fusion.region_values(partition, inputs, method, seed=cfg.seed):
            records.append(
                {
                    "query_image_id": qid,
                    "box": list(region.box.as_tuple()),
                    "n": region.n,
                    "fused": fused,
                    "loc": fusion.qbb_loc_score(loc_map, region.box),
                    "width": width,
                    "height": height,
                }
            )
        records_by_method[method] = records
    return DetectionResult(qid, records_by_method)


def cmd_detect(cfg: PipelineConfig, method: str | None = None) -> tuple[int, int]:
    """Run detection over every manifest sample; returns (ok, failed) counts.

    Per-sample failures are recorded and the batch continues; score records are
    written in manifest order regardless of worker scheduling.
    """
    started = time.perf_counter()
    methods = (method,) if method else cfg.methods
    unknown = [m for m in methods if m not in fusion.METHODS]
    if unknown:
        raise InvalidInputError(f"unknown methods: {unknown}")
    samples = read_manifest(cfg.manifest_path)
    dbs = _load_dbs(cfg)
    external_props = _load_external_proposals(cfg)
    features_map = _load_features_map(cfg)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(
            pool.map(
                lambda s: _detect_one(cfg, s, dbs, external_props, features_map, methods),
                samples,
            )
        )

    errors = [r for r in results if r.error is not None]
    for m in methods:
        lines = []
        for r in results:
            for record in r.records_by_method.get(m, ()):
                lines.append(json.dumps(record, sort_keys=True))
        (cfg.out_dir / f"qbb_scores.{m}.jsonl").write_text(
            "\n".join(lines) + ("\n" if lines else "")
        )
    error_path = cfg.out_dir / "detect_errors.jsonl"
    if errors:
        error_path.write_text(
            "\n".join(
                json.dumps({"query_image_id": r.query_image_id, "error": r.error}, sort_keys=True)
                for r in errors
            )
            + "\n"
        )
    elif error_path.exists():
        error_path.unlink()
    _report_timing([StageTiming("detect", (time.perf_counter() - started) * 1e3)])
    return len(results) - len(errors), len(errors)


def load_detections(cfg: PipelineConfig, methods: Sequence[str]) -> list[SampleDetections]:
    """Assemble evaluation inputs from persisted score records."""
    samples = read_manifest(cfg.manifest_path)
    failed: set[str] = set()
    error_path = cfg.out_dir / "detect_errors.jsonl"
    if error_path.exists():
        for line in error_path.read_text().splitlines():
            if line.strip():
                failed.add(json.loads(line)["query_image_id"])

    per_method: dict[str, dict[str, list[dict]]] = {}
    dims: dict[str, tuple[int, int]] = {}
    for m in methods:
        path = cfg.out_dir / f"qbb_scores.{m}.jsonl"
        if not path.exists():
            raise InvalidInputError(f"missing detection records: {path}")
        grouped: dict[str, list[dict]] = {}
        for line in path.read_text().splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            grouped.setdefault(record["query_image_id"], []).append(record)
            dims[record["query_image_id"]] = (record["width"], record["height"])
        per_method[m] = grouped

    detections = []
    missing: list[str] = []
    for sample in samples:
        if sample.query_image_id in failed:
            continue
        qbbs_by_method = {}
        for m in methods:
            rows = per_method[m].get(sample.query_image_id)
            if rows is None:
                missing.append(f"{sample.query_image_id} ({m})")
                continue
            qbbs_by_method[m] = [
                ScoredQBB(BBox(*r["box"]), float(r["loc"])) for r in rows
            ]
        if len(qbbs_by_method) == len(methods):
            width, height = dims[sample.query_image_id]
            detections.append(SampleDetections(sample, width, height, qbbs_by_method))
    if missing:
        raise InvalidInputError(f"missing detection records for samples: {sorted(set(missing))}")
    if not detections:
        raise InvalidInputError("no evaluable samples: every sample failed detection")
    return detections


def cmd_eval(
    cfg: PipelineConfig,
    method: str | None = None,
    roc_neg_max: float | None = None,
) -> Report:
    """Evaluate persisted detections and write the method-by-sweep AP table."""
    started = time.perf_counter()
    methods = (method,) if method else cfg.methods
    if not methods:
        raise InvalidInputError("at least one method is required")
    sweep = (roc_neg_max,) if roc_neg_max is not None else cfg.roc_neg_max_sweep
    detections = load_detections(cfg, methods)
    report = evaluate_methods(detections, methods, sweep, cfg.difficulty)
    (cfg.out_dir / "report.csv").write_text(report.to_csv())
    _report_timing([StageTiming("eval", (time.perf_counter() - started) * 1e3)])
    return report


def _report_timing(timings: Sequence[StageTiming]) -> None:
    for t in timings:
        print(f"[timing] {t.name}: {t.milliseconds:.1f} ms")
