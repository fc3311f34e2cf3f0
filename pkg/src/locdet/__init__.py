"""Object-level change detection driven by self-localization rank fusion.

A query image is covered with overlapping subimage proposals; each proposal is
located against a database of reference subimages, and the per-proposal
ground-truth rank values are fused pixel-wise into a likelihood-of-change map.
Detection quality is summarized with difficulty-controlled average precision.
"""

from .descriptor import DescriptorConfig, extract_builtin, l2_normalize, load_external_features
from .errors import (
    DegenerateInputError,
    FormatError,
    InvalidInputError,
    MissingGroundTruthError,
    NoEvidenceError,
    UndefinedMetricError,
)
from .evaluation import (
    DifficultyConfig,
    TestSample,
    ap_101,
    evaluate_methods,
    label_qbb,
    roc,
    sob,
)
from .fusion import (
    METHODS,
    FusionInput,
    LoCMap,
    build_loc_map,
    qbb_loc_score,
    rank_fuse,
    rank_fuse_capped,
    score_max,
    score_sum,
)
from .geometry import (
    BBox,
    Proposal,
    Region,
    RegionPartition,
    coverers_at,
    five_box_proposals,
    intersect,
    intersection_closure,
)
from .retrieval import ReferenceDB, build_db, gt_rank, rank
from .synth import SynthConfig, gen_dataset, gen_pair

__all__ = [
    "BBox",
    "DegenerateInputError",
    "DescriptorConfig",
    "DifficultyConfig",
    "FormatError",
    "FusionInput",
    "InvalidInputError",
    "LoCMap",
    "METHODS",
    "MissingGroundTruthError",
    "NoEvidenceError",
    "Proposal",
    "ReferenceDB",
    "Region",
    "RegionPartition",
    "SynthConfig",
    "TestSample",
    "UndefinedMetricError",
    "ap_101",
    "build_db",
    "build_loc_map",
    "coverers_at",
    "evaluate_methods",
    "extract_builtin",
    "five_box_proposals",
    "gen_dataset",
    "gen_pair",
    "gt_rank",
    "intersect",
    "intersection_closure",
    "l2_normalize",
    "label_qbb",
    "load_external_features",
    "qbb_loc_score",
    "rank",
    "rank_fuse",
    "rank_fuse_capped",
    "roc",
    "score_max",
    "score_sum",
    "sob",
]
