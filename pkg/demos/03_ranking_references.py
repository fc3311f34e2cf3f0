"""Self-localization as a ranking function.

A database holds descriptors of every reference subimage. Localizing a query
subimage means ranking all reference entries by distance; the position of the
first entry from the true reference image is the ground-truth rank, and its
normalized form in (0, 1] is what the change detector consumes.
"""

from locdet import DescriptorConfig, build_db, five_box_proposals, gt_rank, rank
from locdet.descriptor import to_storage_precision, extract_builtin
from locdet.synth import SynthConfig, gen_pair, ref_image_id

cfg = SynthConfig(seed=11, image_size=128, n_pairs=6, change_rate=0.5,
                  jitter_max=3, brightness_max=10, object_size_range=(24, 48))
pairs = [gen_pair(cfg, i) for i in range(cfg.n_pairs)]

dcfg = DescriptorConfig(canonical_size=128, builtin_grid=8)
images = {ref_image_id(p.index): p.reference for p in pairs}
proposals = {iid: five_box_proposals(128, 128) for iid in images}
db = build_db(images, proposals, dcfg)
print(f"database: {len(db)} reference subimages of dimension {db.dimension}")

# Rank every query subimage of one pair against the whole database.
pair = pairs[0]
gt = ref_image_id(pair.index)
for prop in five_box_proposals(128, 128):
    vec = to_storage_precision(extract_builtin(pair.query, prop.box, dcfg))
    ranked = rank(vec, db)
    position = gt_rank(ranked, gt, db)
    print(
        f"  box {prop.box.as_tuple()}: raw rank {position.raw:2d} of {position.length}, "
        f"normalized {position.normalized:.4f}, best distance {ranked.distances[position.raw - 1]:.4f}"
    )
