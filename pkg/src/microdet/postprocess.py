"""Grid decoding into image-space detections and DIoU duplicate suppression.

Decode follows the head convention: center (sigmoid(t) + cell) * stride,
size anchor * exp(t); confidence is objectness times the best class
probability. Suppression is greedy by descending confidence with exact
ties broken by grid provenance, using DIoU = IoU - rho^2/c^2 so that two
boxes with equal overlap but distant centers suppress less.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boxes import Box, Detection, LetterboxTransform
from .ingest.anchors import AnchorSet
from .kernels import diou_nms as _diou_nms_kernel
from .model.encode import GridGeometry

DEFAULT_CONF_THRESHOLD = 0.5
DEFAULT_NMS_THRESHOLD = 0.45


@dataclass
class GridPrediction:
    """Raw head output for one image: (G, G, A*7) with grid geometry attached."""

    tensor: np.ndarray
    geometry: GridGeometry
    letterbox: LetterboxTransform | None = None
    source_id: str = ""
    frame_index: int = 0

    def __post_init__(self):
        g = self.geometry.grid_size
        if self.tensor.shape[0] != g or self.tensor.shape[1] != g:
            raise ValueError(f"grid tensor {self.tensor.shape} does not match grid size {g}")
        if self.tensor.shape[2] % 7 != 0:
            raise ValueError("channel count must be n_anchors * 7")

    @property
    def n_anchors(self) -> int:
        return self.tensor.shape[2] // 7


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def decode(
    pred: GridPrediction,
    anchors: AnchorSet,
    conf_threshold: float = DEFAULT_CONF_THRESHOLD,
) -> list[Detection]:
    """Emit detections with confidence >= threshold in source-image pixels."""
    if not 0.0 <= conf_threshold <= 1.0:
        raise ValueError(f"conf_threshold must be in [0, 1], got {conf_threshold}")
    g = pred.geometry.grid_size
    a = pred.n_anchors
    if a != len(anchors):
        raise ValueError(f"prediction has {a} anchors, anchor set has {len(anchors)}")
    stride = float(pred.geometry.stride)

    t = pred.tensor.reshape(g, g, a, 7).astype(np.float64)
    txy = t[..., 0:2]
    twh = np.clip(t[..., 2:4], -9.0, 9.0)
    conf_obj = _sigmoid(t[..., 4])
    cls_prob = _sigmoid(t[..., 5:])

    gx, gy = np.meshgrid(np.arange(g), np.arange(g))  # gx varies along axis 1
    centers = (_sigmoid(txy) + np.stack([gx, gy], axis=-1)[:, :, None, :]) * stride
    sizes = anchors.as_array()[None, None, :, :] * np.exp(twh)

    confidence = conf_obj * cls_prob.max(axis=-1)
    class_ids = cls_prob.argmax(axis=-1)
    keep = confidence >= conf_threshold
    if not keep.any():
        return []

    ys, xs, ans = np.nonzero(keep)
    provenance = (ys * g + xs) * a + ans
    c = centers[ys, xs, ans]
    s = sizes[ys, xs, ans]
    corners = np.concatenate([c - s / 2.0, c + s / 2.0], axis=1)
    if pred.letterbox is not None:
        corners = pred.letterbox.invert_corners(corners)

    # boxes keep their decoded extent even when overhanging the frame edge
    detections = []
    for i in range(len(ys)):
        x1, y1, x2, y2 = corners[i]
        detections.append(
            Detection(
                box=Box(x1, y1, x2, y2),
                class_id=int(class_ids[ys[i], xs[i], ans[i]]),
                confidence=float(confidence[ys[i], xs[i], ans[i]]),
                source_id=pred.source_id,
                frame_index=pred.frame_index,
                provenance=int(provenance[i]),
            )
        )
    return detections


def reference_decode(
    pred: GridPrediction,
    anchors: AnchorSet,
    conf_threshold: float = DEFAULT_CONF_THRESHOLD,
) -> list[Detection]:
    """Straight per-cell loop decoder; slow, kept as the vectorized path's check."""
    import math

    g = pred.geometry.grid_size
    stride = pred.geometry.stride
    anchor_arr = anchors.as_array()
    sig = lambda v: 1.0 / (1.0 + math.exp(-v))
    out = []
    for gy in range(g):
        for gx in range(g):
            for ai in range(pred.n_anchors):
                tx, ty, tw, th, tc, p0, p1 = (
                    float(v) for v in pred.tensor[gy, gx, ai * 7 : ai * 7 + 7]
                )
                probs = [sig(p0), sig(p1)]
                conf = sig(tc) * max(probs)
                if conf < conf_threshold:
                    continue
                bx = (sig(tx) + gx) * stride
                by = (sig(ty) + gy) * stride
                bw = anchor_arr[ai, 0] * math.exp(max(-9.0, min(9.0, tw)))
                bh = anchor_arr[ai, 1] * math.exp(max(-9.0, min(9.0, th)))
                box = Box.from_center(bx, by, bw, bh)
                if pred.letterbox is not None:
                    box = pred.letterbox.invert_box(box)
                out.append(
                    Detection(
                        box=box,
                        class_id=int(probs[1] > probs[0]),
                        confidence=conf,
                        source_id=pred.source_id,
                        frame_index=pred.frame_index,
                        provenance=(gy * g + gx) * pred.n_anchors + ai,
                    )
                )
    return out


def diou_nms(dets: list[Detection], overlap_threshold: float = DEFAULT_NMS_THRESHOLD) -> list[Detection]:
    """Class-wise greedy suppression; deterministic under input permutation."""
    if not 0.0 < overlap_threshold < 1.0:
        raise ValueError(f"overlap_threshold must be in (0, 1), got {overlap_threshold}")
    if not dets:
        return []
    boxes = np.array([d.box.as_tuple() for d in dets], dtype=np.float64)
    scores = np.array([d.confidence for d in dets])
    classes = np.array([d.class_id for d in dets], dtype=np.int64)
    provenance = np.array([d.provenance for d in dets], dtype=np.int64)
    order = np.lexsort((provenance, -scores))
    kept_sorted = _diou_nms_kernel(boxes[order], classes[order], overlap_threshold)
    return [dets[order[i]] for i in kept_sorted]


def detection_to_row(d: Detection) -> dict:
    return {
        "source_id": d.source_id,
        "frame": d.frame_index,
        "class": d.class_id,
        "conf": d.confidence,
        "x_min": d.box.x_min,
        "y_min": d.box.y_min,
        "x_max": d.box.x_max,
        "y_max": d.box.y_max,
    }


def write_detections_jsonl(path: str | Path, dets: list[Detection]) -> None:
    with open(path, "w") as fh:
        for d in dets:
            fh.write(json.dumps(detection_to_row(d)) + "\n")


def read_detections_jsonl(path: str | Path) -> list[Detection]:
    """Load detections; provenance is the line number (file order breaks ties)."""
    out = []
    with open(path) as fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            row = json.loads(line)
            out.append(
                Detection(
                    box=Box(row["x_min"], row["y_min"], row["x_max"], row["y_max"]),
                    class_id=int(row["class"]),
                    confidence=float(row["conf"]),
                    source_id=row.get("source_id", ""),
                    frame_index=int(row["frame"]),
                    provenance=i,
                )
            )
    return out
