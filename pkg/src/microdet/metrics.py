"""Detection quality metrics: IoU, relaxed matching, AP/F1/Pre/Rec, k-fold stats.

The positive-sample rule is deliberately looser than plain IoU: a detection
of the right class counts as TP against an unmatched ground truth when
IoU >= b1, or when IoU >= b2 and the box centers are within r pixels. For
objects of ~10 px a one-pixel shift already drops IoU below 0.5, which is
what the center-distance branch compensates for.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .boxes import Annotation, Box, Detection, boxes_to_array
from .kernels import iou_matrix

log = logging.getLogger(__name__)


def iou(a: Box, b: Box) -> float:
    """Intersection over union; 0 for disjoint pairs, 0 + warning for zero-area."""
    if a.area <= 0.0 or b.area <= 0.0:
        log.warning("zero-area box in IoU; defining IoU = 0")
        return 0.0
    return float(iou_matrix(np.array([a.as_tuple()]), np.array([b.as_tuple()]))[0, 0])


@dataclass(frozen=True)
class MatchCriterion:
    """Relaxed positive-sample rule: IoU >= b1, or IoU >= b2 and centers within r px."""

    b1: float = 0.5
    b2: float = 0.45
    r: float = 3.0

    def __post_init__(self):
        if not (0.0 < self.b2 <= self.b1 < 1.0):
            raise ValueError(f"need 0 < b2 <= b1 < 1, got b1={self.b1}, b2={self.b2}")
        if self.r < 0.0:
            raise ValueError(f"r must be >= 0, got {self.r}")


@dataclass
class MatchResult:
    """Per-detection TP/FP labels and per-ground-truth matched/FN state."""

    det_is_tp: np.ndarray        # bool, aligned with the confidence-sorted dets
    det_order: np.ndarray        # indices into the caller's detection list
    gt_matched: np.ndarray       # bool per ground truth
    pairs: list[tuple[int, int]]  # (det index, gt index) in caller coordinates

    @property
    def tp(self) -> int:
        return int(self.det_is_tp.sum())

    @property
    def fp(self) -> int:
        return int((~self.det_is_tp).sum())

    @property
    def fn(self) -> int:
        return int((~self.gt_matched).sum())


def _detection_sort_order(dets: list[Detection]) -> np.ndarray:
    keys = [(-d.confidence, d.frame_index, d.provenance, i) for i, d in enumerate(dets)]
    return np.array([k[-1] for k in sorted(keys)], dtype=np.int64)


def match(
    dets: list[Detection],
    gts: list[Annotation],
    criterion: MatchCriterion = MatchCriterion(),
) -> MatchResult:
    """Greedy one-to-one assignment in descending confidence order.

    Each detection takes the highest-IoU eligible unmatched ground truth of
    its own class on its own frame; exact IoU ties break toward the smaller
    center distance. Matching is frame-local, so it is evaluated per frame
    group without changing the global greedy semantics.
    """
    order = _detection_sort_order(dets)
    gt_matched = np.zeros(len(gts), dtype=bool)
    det_is_tp = np.zeros(len(dets), dtype=bool)
    pairs: list[tuple[int, int]] = []

    gt_by_frame: dict[tuple[str, int], list[int]] = {}
    for gi, gt in enumerate(gts):
        gt_by_frame.setdefault((gt.source_id, gt.frame_index), []).append(gi)

    if dets and gts:
        ious = iou_matrix(boxes_to_array(dets), boxes_to_array(gts))
        det_centers = np.array([d.box.center for d in dets])
        gt_centers = np.array([g.box.center for g in gts])
        for di in order:
            det = dets[di]
            best_gi = -1
            best = (-1.0, math.inf)
            for gi in gt_by_frame.get((det.source_id, det.frame_index), ()):
                if gt_matched[gi] or gts[gi].class_id != det.class_id:
                    continue
                v = ious[di, gi]
                d = math.hypot(
                    det_centers[di, 0] - gt_centers[gi, 0],
                    det_centers[di, 1] - gt_centers[gi, 1],
                )
                if not (v >= criterion.b1 or (v >= criterion.b2 and d <= criterion.r)):
                    continue
                if v > best[0] or (v == best[0] and d < best[1]):
                    best = (v, d)
                    best_gi = gi
            if best_gi >= 0:
                gt_matched[best_gi] = True
                det_is_tp[di] = True
                pairs.append((int(di), best_gi))

    return MatchResult(
        det_is_tp=det_is_tp[order],
        det_order=order,
        gt_matched=gt_matched,
        pairs=pairs,
    )


def pr_curve_and_ap(
    dets: list[Detection],
    gts: list[Annotation],
    criterion: MatchCriterion = MatchCriterion(),
    literal_recall_product: bool = False,
) -> tuple[float, list[tuple[float, float]]]:
    """Average precision over the dataset-wide confidence ranking.

    AP = sum_i Precision(i) * delta(i) / N_annotations with delta(i) = 1 when
    detection i is a true positive: the per-detection recall increment times
    precision, i.e. non-interpolated AP. ``literal_recall_product`` instead
    multiplies by cumulative recall at each rank (kept for audit only; it
    double-counts recall and does not reach 1.0 for a perfect detector).
    Returns (AP, [(recall_i, precision_i), ...]).
    """
    if not gts:
        raise ValueError("AP is undefined with zero annotations")
    result = match(dets, gts, criterion)
    n_gt = len(gts)
    tp_cum = np.cumsum(result.det_is_tp)
    ranks = np.arange(1, len(dets) + 1)
    precision = tp_cum / ranks if len(dets) else np.empty(0)
    recall = tp_cum / n_gt if len(dets) else np.empty(0)
    if len(dets) == 0:
        return 0.0, []
    if literal_recall_product:
        ap = float(np.sum(precision * recall) / n_gt)
    else:
        ap = float(np.sum(precision[result.det_is_tp]) / n_gt)
    curve = list(zip(recall.tolist(), precision.tolist()))
    return ap, curve


@dataclass
class MetricReport:
    """Per-class AP, mAP and threshold-level counts for one evaluation run."""

    ap_per_class: dict[int, float | None]
    mean_ap: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    criterion: MatchCriterion
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ap_per_class": {str(k): v for k, v in self.ap_per_class.items()},
            "mean_ap": self.mean_ap,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "criterion": {"b1": self.criterion.b1, "b2": self.criterion.b2, "r": self.criterion.r},
            "notes": self.notes,
        }


def report(
    dets: list[Detection],
    gts: list[Annotation],
    criterion: MatchCriterion = MatchCriterion(),
) -> MetricReport:
    """Full evaluation: class-restricted APs, mAP, and counts at the operating point."""
    notes: list[str] = []
    ap_per_class: dict[int, float | None] = {}
    present = sorted({g.class_id for g in gts})
    for cid in sorted({g.class_id for g in gts} | {d.class_id for d in dets}):
        if cid not in present:
            ap_per_class[cid] = None
            notes.append(f"class {cid} absent from ground truth; AP not applicable")
            continue
        cls_dets = [d for d in dets if d.class_id == cid]
        cls_gts = [g for g in gts if g.class_id == cid]
        ap, _ = pr_curve_and_ap(cls_dets, cls_gts, criterion)
        ap_per_class[cid] = ap
    applicable = [v for v in ap_per_class.values() if v is not None]
    mean_ap = float(np.mean(applicable)) if applicable else 0.0

    result = match(dets, gts, criterion)
    tp, fp, fn = result.tp, result.fp, result.fn
    if tp + fp == 0:
        precision = 0.0
        if gts:
            notes.append("no detections; precision reported as 0 by convention")
    else:
        precision = tp / (tp + fp)
    recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) > 0 else 0.0
    return MetricReport(
        ap_per_class=ap_per_class,
        mean_ap=mean_ap,
        precision=precision,
        recall=recall,
        f1=f1,
        tp=tp,
        fp=fp,
        fn=fn,
        criterion=criterion,
        notes=notes,
    )


def crossval_aggregate(per_fold: list[dict[str, float]], ddof: int = 0) -> dict[str, dict[str, float]]:
    """Per-metric mean and standard deviation across fold reports.

    ``ddof=0`` (population form) is the convention five-fold summary rows
    are reported in here; pass ``ddof=1`` for the sample estimator.
    """
    if len(per_fold) < 2:
        raise ValueError("need at least 2 fold reports to aggregate")
    keys = set(per_fold[0])
    for i, fold in enumerate(per_fold[1:], start=2):
        if set(fold) != keys:
            raise ValueError(f"fold {i} metric set {sorted(fold)} != {sorted(keys)}")
    out: dict[str, dict[str, float]] = {}
    for key in sorted(keys):
        values = np.array([fold[key] for fold in per_fold], dtype=np.float64)
        out[key] = {
            "mean": float(values.mean()),
            "stdev": float(values.std(ddof=ddof)),
        }
    return out
