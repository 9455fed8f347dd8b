"""Ground-truth encoding into the anchor grid and its exact inverse.

Per assigned (cell, anchor) slot the regression target is
(t_x, t_y, t_w, t_h) with sigmoid(t_x) + C_x the center in cell units and
P_w * exp(t_w) the width, so decode(encode(box)) reproduces the box to
floating-point precision.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..boxes import Annotation, Box
from ..ingest.anchors import AnchorSet, wh_iou

log = logging.getLogger(__name__)

FRAC_EPS = 1e-9  # keeps logit finite for centers on cell boundaries


@dataclass(frozen=True)
class GridGeometry:
    input_size: int
    stride: int = 8

    def __post_init__(self):
        if self.input_size % self.stride != 0:
            raise ValueError(f"input_size {self.input_size} not divisible by stride {self.stride}")

    @property
    def grid_size(self) -> int:
        return self.input_size // self.stride


@dataclass
class TargetTensor:
    """Per-image training targets aligned with the (G, G, A) prediction grid."""

    objectness: np.ndarray    # (G, G, A) in {0, 1}
    t_reg: np.ndarray         # (G, G, A, 4) encoded (t_x, t_y, t_w, t_h)
    gt_boxes: np.ndarray      # (G, G, A, 4) corner boxes in network pixels
    class_probs: np.ndarray   # (G, G, A, C) multi-label targets
    geometry: GridGeometry

    @property
    def n_assigned(self) -> int:
        return int(self.objectness.sum())


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def encode_box(box: Box, cell: tuple[int, int], anchor: tuple[float, float], stride: int):
    """(t_x, t_y, t_w, t_h) for a box against one (cell, anchor) slot."""
    cx, cy = box.center
    fx = min(max(cx / stride - cell[0], FRAC_EPS), 1.0 - FRAC_EPS)
    fy = min(max(cy / stride - cell[1], FRAC_EPS), 1.0 - FRAC_EPS)
    return (
        _logit(fx),
        _logit(fy),
        math.log(box.width / anchor[0]),
        math.log(box.height / anchor[1]),
    )


def decode_box(t, cell: tuple[int, int], anchor: tuple[float, float], stride: int) -> Box:
    """Inverse of encode_box: sigmoid/exp mapping back to a corner box."""
    tx, ty, tw, th = t
    bx = (1.0 / (1.0 + math.exp(-tx)) + cell[0]) * stride
    by = (1.0 / (1.0 + math.exp(-ty)) + cell[1]) * stride
    bw = anchor[0] * math.exp(tw)
    bh = anchor[1] * math.exp(th)
    return Box.from_center(bx, by, bw, bh)


def encode_targets(
    annotations: list[Annotation],
    anchors: AnchorSet,
    geometry: GridGeometry,
    n_classes: int = 2,
) -> TargetTensor:
    """Assign each box to the cell holding its center and its max-IoU anchor.

    Two boxes claiming the same slot keep the larger area; the loser is
    logged and left unassigned.
    """
    g = geometry.grid_size
    a = len(anchors)
    target = TargetTensor(
        objectness=np.zeros((g, g, a), dtype=np.float64),
        t_reg=np.zeros((g, g, a, 4), dtype=np.float64),
        gt_boxes=np.zeros((g, g, a, 4), dtype=np.float64),
        class_probs=np.zeros((g, g, a, n_classes), dtype=np.float64),
        geometry=geometry,
    )
    if not annotations:
        return target

    anchor_arr = anchors.as_array()
    wh = np.array([[ann.box.width, ann.box.height] for ann in annotations])
    best_anchor = wh_iou(wh, anchor_arr).argmax(axis=1)
    areas = wh.prod(axis=1)

    claimed: dict[tuple[int, int, int], float] = {}
    for idx, ann in enumerate(annotations):
        cx, cy = ann.box.center
        if not (0.0 <= cx < geometry.input_size and 0.0 <= cy < geometry.input_size):
            raise ValueError(f"box center ({cx:.1f}, {cy:.1f}) outside network input")
        cell_x = min(int(cx // geometry.stride), g - 1)
        cell_y = min(int(cy // geometry.stride), g - 1)
        ai = int(best_anchor[idx])
        slot = (cell_y, cell_x, ai)
        if slot in claimed:
            if areas[idx] <= claimed[slot]:
                log.warning(
                    "slot (cell=%d,%d anchor=%d) already claimed; dropping smaller box #%d",
                    cell_y, cell_x, ai, idx,
                )
                continue
            log.warning(
                "slot (cell=%d,%d anchor=%d) reassigned to larger box #%d",
                cell_y, cell_x, ai, idx,
            )
        claimed[slot] = areas[idx]
        t = encode_box(ann.box, (cell_x, cell_y), tuple(anchor_arr[ai]), geometry.stride)
        target.objectness[cell_y, cell_x, ai] = 1.0
        target.t_reg[cell_y, cell_x, ai] = t
        target.gt_boxes[cell_y, cell_x, ai] = ann.box.as_tuple()
        target.class_probs[cell_y, cell_x, ai] = 0.0
        target.class_probs[cell_y, cell_x, ai, ann.class_id] = 1.0
    return target


def decode_targets(target: TargetTensor, anchors: AnchorSet) -> list[tuple[Box, int]]:
    """Reconstruct (box, class_id) pairs from an encoded target tensor."""
    anchor_arr = anchors.as_array()
    stride = target.geometry.stride
    out = []
    for cell_y, cell_x, ai in zip(*np.nonzero(target.objectness)):
        box = decode_box(
            target.t_reg[cell_y, cell_x, ai],
            (int(cell_x), int(cell_y)),
            tuple(anchor_arr[ai]),
            stride,
        )
        class_id = int(target.class_probs[cell_y, cell_x, ai].argmax())
        out.append((box, class_id))
    return out
