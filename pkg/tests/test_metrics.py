"""Metric-layer tests: IoU oracle, relaxed matching fixtures, AP, k-fold stats."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microdet.boxes import Annotation, Box, Detection, box_iou
from microdet.kernels import iou_matrix
from microdet.metrics import (
    MatchCriterion,
    crossval_aggregate,
    iou,
    match,
    pr_curve_and_ap,
    report,
)


def _det(x_min, y_min, x_max, y_max, cls=0, conf=0.9, frame=0, prov=0):
    return Detection(Box(x_min, y_min, x_max, y_max), cls, conf, frame_index=frame, provenance=prov)


def _gt(x_min, y_min, x_max, y_max, cls=0, frame=0):
    return Annotation(Box(x_min, y_min, x_max, y_max), cls, frame_index=frame)

from oracles import exact_iou


class TestIoU:
    def test_identical(self):
        b = Box(3, 4, 10, 12)
        assert iou(b, b) == 1.0

    def test_disjoint(self):
        assert iou(Box(0, 0, 5, 5), Box(10, 10, 20, 20)) == 0.0

    def test_hand_case_one_seventh(self):
        # inter 5x5 = 25, union 100 + 100 - 25 = 175
        assert iou(Box(0, 0, 10, 10), Box(5, 5, 15, 15)) == 25 / 175

    def test_exact_agreement_on_integer_lattice(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            a = np.sort(rng.integers(0, 200, size=4).astype(float).reshape(2, 2), axis=0)
            b = np.sort(rng.integers(0, 200, size=4).astype(float).reshape(2, 2), axis=0)
            a = (a[0, 0], a[0, 1], a[1, 0] + 1, a[1, 1] + 1)
            b = (b[0, 0], b[0, 1], b[1, 0] + 1, b[1, 1] + 1)
            got = iou(Box(*a), Box(*b))
            assert got == float(exact_iou(a, b))

    @given(
        st.tuples(*[st.floats(0, 100) for _ in range(4)]),
        st.tuples(*[st.floats(0, 100) for _ in range(4)]),
    )
    @settings(max_examples=300, deadline=None)
    def test_symmetry(self, p, q):
        a = Box(p[0], p[1], p[0] + p[2] + 1e-3, p[1] + p[3] + 1e-3)
        b = Box(q[0], q[1], q[0] + q[2] + 1e-3, q[1] + q[3] + 1e-3)
        assert iou(a, b) == iou(b, a)

    def test_zero_area_warned_zero(self, caplog):
        class Flat:
            area = 0.0

            def as_tuple(self):
                return (0.0, 0.0, 0.0, 5.0)

        with caplog.at_level("WARNING"):
            assert iou(Flat(), Box(0, 0, 5, 5)) == 0.0
        assert "zero-area" in caplog.text


class TestRelaxedMatch:
    """The three hand-derived fixtures at (b1, b2, r) = (0.5, 0.45, 3)."""

    CRIT = MatchCriterion(0.5, 0.45, 3.0)

    def test_shift_one_px_is_tp_via_b1(self):
        gt = [_gt(95, 95, 105, 105)]
        det = [_det(96, 96, 106, 106)]
        # IoU = 81/119 ~ 0.6807 >= 0.5
        assert math.isclose(box_iou(det[0].box, gt[0].box), 81 / 119)
        res = match(det, gt, self.CRIT)
        assert res.tp == 1 and res.fp == 0 and res.fn == 0

    def test_shift_two_px_is_tp_via_b2_and_r(self):
        gt = [_gt(-5, -5, 5, 5)]
        det = [_det(-3, -3, 7, 7)]
        # IoU = 64/136 ~ 0.4706 in [0.45, 0.5); center distance 2*sqrt(2) <= 3
        assert math.isclose(box_iou(det[0].box, gt[0].box), 64 / 136)
        res = match(det, gt, self.CRIT)
        assert res.tp == 1

    def test_shift_three_px_is_fp(self):
        gt = [_gt(-5, -5, 5, 5)]
        det = [_det(-2, -2, 8, 8)]
        # IoU = 49/151 ~ 0.3245 < 0.45
        assert math.isclose(box_iou(det[0].box, gt[0].box), 49 / 151)
        res = match(det, gt, self.CRIT)
        assert res.tp == 0 and res.fp == 1 and res.fn == 1

    def test_class_must_match(self):
        gt = [_gt(0, 0, 10, 10, cls=1)]
        det = [_det(0, 0, 10, 10, cls=0)]
        res = match(det, gt, self.CRIT)
        assert res.tp == 0 and res.fp == 1 and res.fn == 1

    def test_one_to_one_assignment(self):
        gt = [_gt(0, 0, 10, 10)]
        dets = [_det(0, 0, 10, 10, conf=0.9), _det(1, 1, 11, 11, conf=0.8)]
        res = match(dets, gt, self.CRIT)
        assert res.tp == 1 and res.fp == 1

    def test_counts_partition(self):
        rng = np.random.default_rng(3)
        gts, dets = [], []
        for f in range(20):
            for _ in range(rng.integers(0, 6)):
                x, y = rng.uniform(0, 180, 2)
                gts.append(_gt(x, y, x + 10, y + 10, frame=f))
            for i in range(rng.integers(0, 6)):
                x, y = rng.uniform(0, 180, 2)
                dets.append(_det(x, y, x + 10, y + 10, conf=rng.uniform(), frame=f, prov=i))
        res = match(dets, gts, self.CRIT)
        assert res.tp + res.fn == len(gts)
        assert res.tp + res.fp == len(dets)

    def test_degenerate_criterion_equals_plain_iou(self):
        """b2 = b1, r = 0 must reproduce an independent plain-IoU matcher."""
        rng = np.random.default_rng(11)
        crit = MatchCriterion(0.5, 0.5, 0.0)
        for scene in range(500):
            gts, dets = [], []
            for _ in range(rng.integers(1, 5)):
                x, y, w, h = rng.uniform(0, 80), rng.uniform(0, 80), *rng.uniform(6, 16, 2)
                gts.append(_gt(x, y, x + w, y + h, frame=scene))
            for i in range(rng.integers(0, 5)):
                x, y, w, h = rng.uniform(0, 80), rng.uniform(0, 80), *rng.uniform(6, 16, 2)
                dets.append(_det(x, y, x + w, y + h, conf=float(rng.uniform()), frame=scene, prov=i))
            res = match(dets, gts, crit)

            # independent greedy plain-IoU matcher
            taken = set()
            tp = 0
            for d in sorted(dets, key=lambda d: (-d.confidence, d.frame_index, d.provenance)):
                best_gi, best_v = -1, 0.5
                for gi, g in enumerate(gts):
                    if gi in taken or g.frame_index != d.frame_index:
                        continue
                    v = box_iou(d.box, g.box)
                    if v >= best_v and (v > best_v or best_gi < 0):
                        best_gi, best_v = gi, v
                if best_gi >= 0:
                    taken.add(best_gi)
                    tp += 1
            assert res.tp == tp


class TestAveragePrecision:
    def test_worked_three_detection_example(self):
        # ranking [TP, FP, TP] with 2 ground truths -> AP = (1 + 2/3)/2 = 5/6
        gts = [_gt(0, 0, 10, 10), _gt(50, 50, 60, 60)]
        dets = [
            _det(0, 0, 10, 10, conf=0.9, prov=0),
            _det(100, 100, 110, 110, conf=0.8, prov=1),
            _det(50, 50, 60, 60, conf=0.7, prov=2),
        ]
        ap, curve = pr_curve_and_ap(dets, gts)
        assert ap == pytest.approx(5 / 6, abs=1e-12)
        assert curve == [(0.5, 1.0), (0.5, 0.5), (1.0, 2 / 3)]

    def test_perfect_detector(self):
        gts = [_gt(i * 20, 0, i * 20 + 10, 10) for i in range(5)]
        dets = [
            _det(i * 20, 0, i * 20 + 10, 10, conf=1 - i * 0.1, prov=i) for i in range(5)
        ]
        ap, _ = pr_curve_and_ap(dets, gts)
        assert ap == 1.0

    def test_no_detections(self):
        ap, curve = pr_curve_and_ap([], [_gt(0, 0, 10, 10)])
        assert ap == 0.0 and curve == []

    def test_zero_annotations_is_error(self):
        with pytest.raises(ValueError):
            pr_curve_and_ap([_det(0, 0, 10, 10)], [])

    def test_monotone_confidence_invariance(self):
        rng = np.random.default_rng(5)
        gts, dets = [], []
        for f in range(10):
            x, y = rng.uniform(0, 100, 2)
            gts.append(_gt(x, y, x + 10, y + 10, frame=f))
            for i in range(3):
                dx, dy = rng.uniform(-6, 6, 2)
                dets.append(
                    _det(x + dx, y + dy, x + dx + 10, y + dy + 10,
                         conf=float(rng.uniform(0.01, 0.99)), frame=f, prov=i)
                )
        ap0, _ = pr_curve_and_ap(dets, gts)
        squashed = [
            Detection(d.box, d.class_id, d.confidence**3, d.source_id, d.frame_index, d.provenance)
            for d in dets
        ]
        ap1, _ = pr_curve_and_ap(squashed, gts)
        assert ap0 == pytest.approx(ap1, abs=1e-12)

    def test_literal_reading_differs(self):
        gts = [_gt(0, 0, 10, 10), _gt(50, 50, 60, 60)]
        dets = [
            _det(0, 0, 10, 10, conf=0.9, prov=0),
            _det(50, 50, 60, 60, conf=0.7, prov=2),
        ]
        ap_literal, _ = pr_curve_and_ap(dets, gts, literal_recall_product=True)
        # literal: (1 * 0.5 + 1 * 1.0)/2 = 0.75 < 1.0
        assert ap_literal == pytest.approx(0.75, abs=1e-12)


class TestReport:
    def test_perfect(self):
        gts = [_gt(0, 0, 10, 10), _gt(50, 50, 60, 60, cls=1)]
        dets = [_det(0, 0, 10, 10, conf=0.9), _det(50, 50, 60, 60, cls=1, conf=0.8)]
        rep = report(dets, gts)
        assert rep.mean_ap == 1.0 and rep.f1 == 1.0 and rep.precision == 1.0 and rep.recall == 1.0

    def test_empty_detections_convention(self):
        rep = report([], [_gt(0, 0, 10, 10)])
        assert rep.recall == 0.0 and rep.precision == 0.0 and rep.f1 == 0.0
        assert any("convention" in n for n in rep.notes)

    def test_worked_example_prf(self):
        gts = [_gt(0, 0, 10, 10), _gt(50, 50, 60, 60)]
        dets = [
            _det(0, 0, 10, 10, conf=0.9, prov=0),
            _det(100, 100, 110, 110, conf=0.8, prov=1),
            _det(50, 50, 60, 60, conf=0.7, prov=2),
        ]
        rep = report(dets, gts)
        assert rep.precision == pytest.approx(2 / 3)
        assert rep.recall == 1.0
        assert rep.f1 == pytest.approx(0.8)

    def test_class_missing_from_gt(self):
        rep = report([_det(0, 0, 10, 10, cls=1)], [_gt(0, 0, 10, 10, cls=0)])
        assert rep.ap_per_class[1] is None
        assert rep.ap_per_class[0] == 0.0
        assert any("not applicable" in n for n in rep.notes)


class TestCrossvalAggregate:
    FOLD_AP = [85.60, 84.90, 88.80, 86.37, 87.29]

    def test_reference_five_fold_row(self):
        folds = [{"ap": v} for v in self.FOLD_AP]
        agg = crossval_aggregate(folds)
        assert agg["ap"]["mean"] == pytest.approx(86.59, abs=0.01)
        assert agg["ap"]["stdev"] == pytest.approx(1.36, abs=0.01)

    def test_reference_all_metric_rows(self):
        rows = {
            "ap": ([85.60, 84.90, 88.80, 86.37, 87.29], 86.59, 1.36),
            "f1": ([90.00, 90.11, 92.78, 91.33, 90.65], 90.97, 1.02),
            "pre": ([89.47, 92.76, 95.19, 94.12, 91.15], 92.54, 2.05),
            "rec": ([90.54, 87.61, 90.48, 88.66, 90.16], 89.49, 1.16),
        }
        folds = [
            {k: rows[k][0][i] for k in rows} for i in range(5)
        ]
        agg = crossval_aggregate(folds)
        for key, (_, mu, sd) in rows.items():
            assert agg[key]["mean"] == pytest.approx(mu, abs=0.01)
            assert agg[key]["stdev"] == pytest.approx(sd, abs=0.01)

    def test_identical_folds(self):
        agg = crossval_aggregate([{"ap": 5.0}] * 3)
        assert agg["ap"]["stdev"] == 0.0

    def test_two_fold_sample_convention(self):
        agg = crossval_aggregate([{"m": 0.0}, {"m": 1.0}], ddof=1)
        assert agg["m"]["mean"] == 0.5
        assert agg["m"]["stdev"] == pytest.approx(math.sqrt(0.5))

    def test_mismatched_metric_sets(self):
        with pytest.raises(ValueError):
            crossval_aggregate([{"a": 1.0}, {"b": 2.0}])


def test_iou_matrix_matches_scalar():
    rng = np.random.default_rng(0)
    a = rng.uniform(0, 50, (40, 2))
    a = np.hstack([a, a + rng.uniform(1, 20, (40, 2))])
    b = rng.uniform(0, 50, (30, 2))
    b = np.hstack([b, b + rng.uniform(1, 20, (30, 2))])
    mat = iou_matrix(a, b)
    for i in [0, 7, 39]:
        for j in [0, 11, 29]:
            assert mat[i, j] == pytest.approx(box_iou(Box(*a[i]), Box(*b[j])), abs=1e-14)
