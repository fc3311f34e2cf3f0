"""Box arithmetic, the five-box scheme, and intersection-closure regions."""

import numpy as np
import pytest

from conftest import bitmask_members, pixel_coverer_bitmask
from locdet.errors import FormatError, InvalidInputError
from locdet.geometry import (
    EXTERNAL,
    GRID,
    BBox,
    Proposal,
    coverers_at,
    five_box_proposals,
    intersect,
    intersection_closure,
    load_proposals_file,
    write_proposals_file,
)


def boxes_of(partition):
    return {r.box for r in partition.regions}


class TestBBox:
    def test_half_open_containment(self):
        b = BBox(2, 3, 5, 7)
        assert b.contains_point(2, 3)
        assert b.contains_point(4, 6)
        assert not b.contains_point(5, 6)
        assert not b.contains_point(4, 7)
        assert b.area == 12

    def test_rejects_degenerate(self):
        with pytest.raises(InvalidInputError):
            BBox(0, 0, 0, 5)
        with pytest.raises(InvalidInputError):
            BBox(5, 0, 2, 5)
        with pytest.raises(InvalidInputError):
            BBox(-1, 0, 2, 5)

    def test_accepts_numpy_integers(self):
        b = BBox(np.int64(1), np.int64(2), np.int64(3), np.int64(4))
        assert b.as_tuple() == (1, 2, 3, 4)
        assert all(type(v) is int for v in b.as_tuple())

    def test_rejects_fractional(self):
        with pytest.raises(InvalidInputError):
            BBox(0.5, 0, 2, 5)


class TestFiveBoxProposals:
    def test_300x300(self):
        got = {p.box.as_tuple() for p in five_box_proposals(300, 300)}
        assert got == {
            (100, 100, 200, 200),
            (0, 0, 200, 200),
            (100, 0, 300, 200),
            (0, 100, 200, 300),
            (100, 100, 300, 300),
        }

    def test_floored_thirds_1232x1616(self):
        first = five_box_proposals(1232, 1616)[0].box
        assert first.as_tuple() == (410, 538, 821, 1077)

    def test_smallest_legal(self):
        got = {p.box.as_tuple() for p in five_box_proposals(3, 3)}
        assert got == {(1, 1, 2, 2), (0, 0, 2, 2), (1, 0, 3, 2), (0, 1, 2, 3), (1, 1, 3, 3)}

    def test_rejects_degenerate_dims(self):
        with pytest.raises(InvalidInputError):
            five_box_proposals(2, 300)
        with pytest.raises(InvalidInputError):
            five_box_proposals(300, 2)

    def test_metadata(self):
        for p in five_box_proposals(30, 40):
            assert p.source == GRID
            assert p.confidence == 1.0

    def test_within_frame_and_center_coverage(self):
        for w, h in [(3, 3), (10, 17), (300, 300), (1232, 1616)]:
            props = five_box_proposals(w, h)
            assert all(p.box.within_frame(w, h) for p in props)
            assert all(p.box.contains_point(w // 2, h // 2) for p in props)


class TestIntersect:
    def test_partial_overlap(self):
        got = intersect(BBox(0, 0, 10, 10), BBox(5, 0, 15, 10))
        assert got == BBox(5, 0, 10, 10)

    def test_boundary_touch_is_empty(self):
        assert intersect(BBox(0, 0, 5, 5), BBox(5, 0, 10, 5)) is None

    def test_idempotent(self):
        a = BBox(3, 4, 9, 11)
        assert intersect(a, a) == a

    def test_commutative(self):
        a, b = BBox(0, 0, 8, 8), BBox(4, 2, 12, 6)
        assert intersect(a, b) == intersect(b, a)


class TestIntersectionClosure:
    def test_two_overlapping(self):
        a, b = BBox(0, 0, 10, 10), BBox(5, 0, 15, 10)
        part = intersection_closure([a, b])
        by_box = {r.box: r.coverers for r in part.regions}
        assert set(by_box) == {a, b, BBox(5, 0, 10, 10)}
        assert by_box[a] == frozenset({0})
        assert by_box[b] == frozenset({1})
        assert by_box[BBox(5, 0, 10, 10)] == frozenset({0, 1})

    def test_disjoint_unchanged(self):
        a, b = BBox(0, 0, 5, 5), BBox(6, 6, 9, 9)
        part = intersection_closure([a, b])
        assert boxes_of(part) == {a, b}

    def test_three_chain(self):
        # frozen from the per-pixel coverer-set enumeration oracle below
        a, b, c = BBox(0, 0, 10, 10), BBox(4, 0, 14, 10), BBox(8, 0, 18, 10)
        part = intersection_closure([a, b, c])
        by_box = {r.box: r.coverers for r in part.regions}
        assert set(by_box) == {
            a,
            b,
            c,
            BBox(4, 0, 10, 10),
            BBox(8, 0, 14, 10),
            BBox(8, 0, 10, 10),
        }
        assert by_box[BBox(4, 0, 10, 10)] == frozenset({0, 1})
        assert by_box[BBox(8, 0, 14, 10)] == frozenset({1, 2})
        # triple intersection coincides with a-and-c
        assert by_box[BBox(8, 0, 10, 10)] == frozenset({0, 1, 2})

    def test_three_chain_against_pixel_oracle(self):
        boxes = [BBox(0, 0, 10, 10), BBox(4, 0, 14, 10), BBox(8, 0, 18, 10)]
        part = intersection_closure(boxes)
        bits = pixel_coverer_bitmask(18, 10, boxes)
        pixel_sets = {
            frozenset(bitmask_members(int(m))) for m in np.unique(bits) if m != 0
        }
        region_sets = {r.coverers for r in part.regions}
        # every realized coverer set appears as a region; the middle box alone
        # is unrealized because its intersections tile it completely
        assert pixel_sets <= region_sets
        assert region_sets - pixel_sets == {frozenset({1})}

    def test_empty_input_rejected(self):
        with pytest.raises(InvalidInputError):
            intersection_closure([])

    def test_duplicates_coalesce(self):
        a = BBox(0, 0, 10, 10)
        part = intersection_closure([a, a])
        assert len(part.regions) == 1
        assert part.regions[0].coverers == frozenset({0, 1})

    def test_idempotent(self):
        rng = np.random.default_rng(7)
        boxes = _random_boxes(rng, 6, 40)
        once = intersection_closure(boxes)
        again = intersection_closure([r.box for r in once.regions])
        assert boxes_of(once) == boxes_of(again)

    def test_size_bound(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(1, 8))
            boxes = _random_boxes(rng, n, 32)
            part = intersection_closure(boxes)
            assert len(part.regions) <= 2**n - 1

    def test_accepts_proposals(self):
        props = five_box_proposals(30, 30)
        part = intersection_closure(props)
        assert all(r.n >= 1 for r in part.regions)


class TestCoverersAt:
    def test_examples(self):
        boxes = [BBox(0, 0, 10, 10), BBox(4, 0, 14, 10), BBox(8, 0, 18, 10)]
        assert coverers_at((9, 5), boxes) == frozenset({0, 1, 2})
        assert coverers_at((0, 0), boxes) == frozenset({0})
        assert coverers_at((17, 9), boxes) == frozenset({2})

    def test_outside_all(self):
        assert coverers_at((50, 50), [BBox(0, 0, 10, 10)]) == frozenset()


def _random_boxes(rng, n, size):
    boxes = []
    for _ in range(n):
        x0 = int(rng.integers(0, size - 1))
        y0 = int(rng.integers(0, size - 1))
        x1 = int(rng.integers(x0 + 1, size + 1))
        y1 = int(rng.integers(y0 + 1, size + 1))
        boxes.append(BBox(x0, y0, x1, y1))
    return boxes


class TestClosurePixelOracle:
    def test_smallest_region_matches_pixel_coverers(self):
        # every pixel's coverer set equals the coverer set of the smallest
        # closure region containing it, for random instances
        rng = np.random.default_rng(123)
        for _ in range(40):
            size = int(rng.integers(8, 64))
            boxes = _random_boxes(rng, int(rng.integers(1, 9)), size)
            part = intersection_closure(boxes)
            bits = pixel_coverer_bitmask(size, size, boxes)

            painted = np.zeros((size, size), dtype=np.int64)
            for region in part.regions:  # ascending coverer count
                mask = 0
                for i in region.coverers:
                    mask |= 1 << i
                b = region.box
                painted[b.y0 : b.y1, b.x0 : b.x1] = mask
            assert np.array_equal(painted, bits)

            pixel_sets = {
                frozenset(bitmask_members(int(m))) for m in np.unique(bits) if m != 0
            }
            region_sets = {r.coverers for r in part.regions}
            assert pixel_sets <= region_sets


class TestProposalsFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "proposals.jsonl"
        data = {
            "img_b": [Proposal(BBox(0, 0, 4, 4), EXTERNAL, 0.5)],
            "img_a": [
                Proposal(BBox(1, 1, 3, 3), EXTERNAL, 0.9),
                Proposal(BBox(0, 0, 2, 2), GRID, 1.0),
            ],
        }
        write_proposals_file(path, data)
        loaded = load_proposals_file(path)
        assert set(loaded) == {"img_a", "img_b"}
        assert loaded["img_a"] == data["img_a"]
        assert loaded["img_b"] == data["img_b"]

    def test_threshold_filters_external_only(self, tmp_path):
        path = tmp_path / "proposals.jsonl"
        write_proposals_file(
            path,
            {
                "img": [
                    Proposal(BBox(0, 0, 4, 4), EXTERNAL, 0.04),
                    Proposal(BBox(0, 0, 4, 4), EXTERNAL, 0.05),
                    Proposal(BBox(0, 0, 2, 2), GRID, 1.0),
                ]
            },
        )
        loaded = load_proposals_file(path, confidence_threshold=0.05)
        assert [p.confidence for p in loaded["img"]] == [0.05, 1.0]

    def test_bad_json_names_line(self, tmp_path):
        path = tmp_path / "proposals.jsonl"
        path.write_text('{"image_id": "a", "proposals": []}\nnot json\n')
        with pytest.raises(FormatError, match=":2"):
            load_proposals_file(path)

    def test_bad_box_names_line(self, tmp_path):
        path = tmp_path / "proposals.jsonl"
        path.write_text(
            '{"image_id": "a", "proposals": [{"x0": 5, "y0": 0, "x1": 2, "y1": 2, '
            '"confidence": 0.5, "source": "external"}]}\n'
        )
        with pytest.raises(FormatError, match=":1"):
            load_proposals_file(path)

    def test_duplicate_image_rejected(self, tmp_path):
        path = tmp_path / "proposals.jsonl"
        line = '{"image_id": "a", "proposals": []}'
        path.write_text(line + "\n" + line + "\n")
        with pytest.raises(FormatError, match="duplicate"):
            load_proposals_file(path)
