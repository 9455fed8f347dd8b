"""Anchor k-means tests, including the best-of-restarts cost property."""

import numpy as np
import pytest

from microdet.ingest.anchors import (
    AnchorSet,
    DegenerateBoxesError,
    anchor_cost,
    cluster_anchors,
    wh_iou,
)


def reference_lloyd(boxes: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Independent plain Lloyd's iteration with uniform-random init."""
    centers = boxes[rng.choice(len(boxes), k, replace=False)].astype(np.float64)
    last = None
    for _ in range(300):
        assign = wh_iou(boxes, centers).argmax(axis=1)
        if last is not None and np.array_equal(assign, last):
            break
        last = assign
        for c in range(k):
            members = boxes[assign == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    return centers


def _random_boxes(rng, n=200):
    # mixture of small and large shapes, like a microscopy label population
    small = rng.uniform(4, 10, (n // 2, 2))
    large = rng.uniform(12, 30, (n - n // 2, 2))
    return np.vstack([small, large])


class TestClusterAnchors:
    def test_single_cluster_of_identical_boxes(self):
        anchors = cluster_anchors([(8, 8)] * 50, k=1, seed=0)
        assert anchors.anchors == ((8.0, 8.0),)

    def test_two_point_support(self):
        boxes = [(6, 6)] * 100 + [(20, 20)] * 100
        anchors = cluster_anchors(boxes, k=2, seed=1)
        got = anchors.as_array()
        assert np.allclose(got[0], (6, 6), atol=1e-6)
        assert np.allclose(got[1], (20, 20), atol=1e-6)

    def test_deterministic_under_shuffle(self):
        rng = np.random.default_rng(3)
        boxes = _random_boxes(rng)
        a1 = cluster_anchors(boxes, k=6, seed=42)
        shuffled = boxes[rng.permutation(len(boxes))]
        a2 = cluster_anchors(shuffled, k=6, seed=42)
        assert a1 == a2

    def test_sorted_by_area(self):
        rng = np.random.default_rng(4)
        anchors = cluster_anchors(_random_boxes(rng), k=6, seed=0)
        areas = [w * h for w, h in anchors.anchors]
        assert areas == sorted(areas)

    def test_too_few_distinct_boxes(self):
        with pytest.raises(DegenerateBoxesError, match="reduce k"):
            cluster_anchors([(8, 8), (8, 8), (9, 9)], k=3, seed=0)

    def test_beats_reference_restarts(self):
        """Our best-of-restarts cost <= each of 20 reference Lloyd restarts."""
        rng = np.random.default_rng(7)
        boxes = _random_boxes(rng, n=150)
        ours = cluster_anchors(boxes, k=6, seed=11)
        our_cost = anchor_cost(boxes, ours.as_array())
        ref_rng = np.random.default_rng(999)
        for _ in range(20):
            ref = reference_lloyd(boxes, 6, ref_rng)
            assert our_cost <= anchor_cost(boxes, ref) + 1e-9


class TestAnchorSet:
    def test_json_round_trip(self, tmp_path):
        a = AnchorSet(((4.0, 5.0), (10.0, 9.0), (20.0, 22.0)))
        p = tmp_path / "anchors.json"
        a.to_json(p)
        assert AnchorSet.from_json(p) == a

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            AnchorSet(((10.0, 10.0), (2.0, 2.0)))

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            AnchorSet(((0.0, 5.0),))
