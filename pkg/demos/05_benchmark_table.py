"""End-to-end miniature benchmark.

Generates a seeded synthetic dataset, indexes the reference images, runs all
six detection methods over every pair, and prints the method-by-difficulty AP
table. Scale everything up with n_pairs=200 for the full comparison (that is
what the acceptance suite runs).
"""

import tempfile
from pathlib import Path

from locdet.pipeline import PipelineConfig, cmd_detect, cmd_eval, cmd_index, cmd_synth
from locdet.synth import SynthConfig

base = Path(tempfile.mkdtemp(prefix="locdet_demo_"))
cfg = PipelineConfig(
    dataset_dir=base / "data",
    out_dir=base / "out",
    external_proposals=base / "data" / "proposals.jsonl",
    seed=0,
    workers=4,
    synth=SynthConfig(seed=0, image_size=256, n_pairs=30),
)

cmd_synth(cfg)
cmd_index(cfg)
ok, failed = cmd_detect(cfg)
print(f"detected {ok} pairs ({failed} failures)")

report = cmd_eval(cfg)
print()
print(report.to_csv())
print(f"artifacts under {base}")
