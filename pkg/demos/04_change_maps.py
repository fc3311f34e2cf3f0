"""Likelihood-of-change maps from fused rank evidence.

Each proposal contributes its normalized ground-truth rank; pixels fuse the
ranks of exactly the proposals covering them. Poorly localized regions light
up. The six methods differ in how per-pixel evidence combines: full rank
fusion, capped variants, a no-fusion baseline, and two score baselines.
"""

from pathlib import Path

from locdet import METHODS, BBox, FusionInput, build_loc_map, qbb_loc_score, rank_fuse
from locdet.fusion import export_loc_map

# Hand-crafted evidence: a well-localized big box, a mediocre one, and one
# small badly-localized box sitting where something changed.
inputs = [
    FusionInput(BBox(0, 0, 120, 160), rank=0.002, score=0.05),
    FusionInput(BBox(60, 0, 200, 160), rank=0.010, score=0.20),
    FusionInput(BBox(90, 40, 150, 100), rank=0.450, score=1.10),
]

print("fused value where all three overlap:", rank_fuse([0.002, 0.010, 0.450]))

out_dir = Path(__file__).resolve().parent / "output"
for method in METHODS:
    loc_map = build_loc_map(200, 160, inputs, method, seed=0)
    suspect = qbb_loc_score(loc_map, BBox(90, 40, 150, 100))
    background = qbb_loc_score(loc_map, BBox(0, 0, 60, 160))
    print(f"{method:18s} suspect box {suspect:.3f} vs background {background:.3f}")
    loc_path, cov_path = export_loc_map(loc_map, out_dir, "demo")
print(f"\nmaps written under {out_dir}/ as 8-bit graymaps (.loc.pgm / .cov.pgm)")
