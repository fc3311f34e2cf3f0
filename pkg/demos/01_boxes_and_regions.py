"""Subimage proposals and overlap regions.

Every query image is covered with overlapping box proposals. Where boxes
overlap, their intersections are registered as regions of their own, each
knowing exactly which original proposals cover it.
"""

from locdet import BBox, coverers_at, five_box_proposals, intersect, intersection_closure

# The fixed five-box scheme: a center box plus four two-thirds corners.
proposals = five_box_proposals(300, 300)
print("five-box proposals on a 300x300 image:")
for p in proposals:
    print("  ", p.box.as_tuple())

# Pairwise intersection is the basic operation behind region construction.
a, b = BBox(0, 0, 10, 10), BBox(5, 0, 15, 10)
print("\nintersection of", a.as_tuple(), "and", b.as_tuple(), "->", intersect(a, b).as_tuple())

# Closing a proposal set under intersection yields every distinct overlap
# region; the coverer set tells how many proposals vote on each region.
partition = intersection_closure(proposals)
print(f"\nclosure of the five boxes has {len(partition.regions)} regions:")
for region in partition.regions:
    print(f"   {region.box.as_tuple()}  covered by {sorted(region.coverers)}")

# A pixel's coverer set always matches the smallest region containing it.
center = (150, 150)
print("\nproposals covering the center pixel:", sorted(coverers_at(center, proposals)))
