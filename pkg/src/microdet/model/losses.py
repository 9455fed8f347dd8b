"""Complete-IoU box loss and the three-part detection loss.

The total is CIoU over assigned slots, binary cross-entropy on confidence
over every slot, and binary cross-entropy on the per-class sigmoid outputs
over assigned slots. Probabilities are clamped to [1e-7, 1 - 1e-7] before
the log, so saturated targets cost epsilon instead of infinity. All terms
are differentiated exactly as written (no detached factors), which is what
the finite-difference checks assume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from ..boxes import Box
from ..ingest.anchors import AnchorSet
from .encode import GridGeometry

PROB_EPS = 1e-7
GEOM_EPS = 1e-12
TWH_CLAMP = 9.0  # keeps exp(t_w) bounded during early training


@dataclass(frozen=True)
class LossWeights:
    box: float = 1.0
    obj_pos: float = 5.0
    obj_neg: float = 1.0
    cls: float = 1.0


def ciou_terms(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """Elementwise CIoU loss for corner-form boxes of matching shape (..., 4).

    loss = 1 - IoU + rho^2/c^2 + alpha*v with v the arctan aspect penalty
    and alpha = v / ((1 - IoU) + v). Degenerate widths/heights are floored
    at epsilon, so the result is always finite.
    """
    px1, py1, px2, py2 = pred.unbind(-1)
    gx1, gy1, gx2, gy2 = gt.unbind(-1)
    pw = (px2 - px1).clamp(min=GEOM_EPS)
    ph = (py2 - py1).clamp(min=GEOM_EPS)
    gw = (gx2 - gx1).clamp(min=GEOM_EPS)
    gh = (gy2 - gy1).clamp(min=GEOM_EPS)

    iw = (torch.minimum(px2, gx2) - torch.maximum(px1, gx1)).clamp(min=0.0)
    ih = (torch.minimum(py2, gy2) - torch.maximum(py1, gy1)).clamp(min=0.0)
    inter = iw * ih
    union = pw * ph + gw * gh - inter
    iou = inter / (union + GEOM_EPS)

    rho2 = ((px1 + px2) - (gx1 + gx2)) ** 2 / 4.0 + ((py1 + py2) - (gy1 + gy2)) ** 2 / 4.0
    cw = torch.maximum(px2, gx2) - torch.minimum(px1, gx1)
    ch = torch.maximum(py2, gy2) - torch.minimum(py1, gy1)
    c2 = cw**2 + ch**2 + GEOM_EPS

    v = (4.0 / math.pi**2) * (torch.atan(gw / gh) - torch.atan(pw / ph)) ** 2
    alpha = v / ((1.0 - iou) + v + GEOM_EPS)
    return 1.0 - iou + rho2 / c2 + alpha * v


def ciou_loss(pred_box, gt_box) -> float:
    """Scalar CIoU loss between two boxes (Box or (x1, y1, x2, y2))."""
    p = pred_box.as_tuple() if isinstance(pred_box, Box) else tuple(pred_box)
    g = gt_box.as_tuple() if isinstance(gt_box, Box) else tuple(gt_box)
    value = ciou_terms(
        torch.tensor(p, dtype=torch.float64), torch.tensor(g, dtype=torch.float64)
    )
    return float(value)


def _bce(p: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    p = p.clamp(PROB_EPS, 1.0 - PROB_EPS)
    return -(y * torch.log(p) + (1.0 - y) * torch.log(1.0 - p))


def decode_raw(
    raw: torch.Tensor, anchors: AnchorSet, geometry: GridGeometry
) -> dict[str, torch.Tensor]:
    """Split head output (B, A*7, G, G) into decoded tensors, differentiably.

    Returns pred corner boxes in network pixels plus confidence/class
    probabilities, each shaped (B, G, G, A, ...).
    """
    b, channels, g, _ = raw.shape
    a = len(anchors)
    if channels != a * 7 or g != geometry.grid_size:
        raise ValueError(
            f"raw shape {tuple(raw.shape)} inconsistent with {a} anchors "
            f"and grid {geometry.grid_size}"
        )
    out = raw.view(b, a, 7, g, g).permute(0, 3, 4, 1, 2)  # (B, gy, gx, A, 7)
    txy = out[..., 0:2]
    twh = out[..., 2:4].clamp(-TWH_CLAMP, TWH_CLAMP)
    stride = float(geometry.stride)

    cell = torch.arange(g, dtype=raw.dtype, device=raw.device)
    gy, gx = torch.meshgrid(cell, cell, indexing="ij")
    offsets = torch.stack([gx, gy], dim=-1)[None, :, :, None, :]  # (1, gy, gx, 1, 2)

    centers = (torch.sigmoid(txy) + offsets) * stride
    anchor_t = torch.as_tensor(anchors.as_array(), dtype=raw.dtype, device=raw.device)
    sizes = anchor_t[None, None, None, :, :] * torch.exp(twh)
    half = sizes / 2.0
    boxes = torch.cat([centers - half, centers + half], dim=-1)
    return {
        "boxes": boxes,                                # (B, G, G, A, 4) xyxy
        "conf": torch.sigmoid(out[..., 4]),            # (B, G, G, A)
        "cls": torch.sigmoid(out[..., 5:]),            # (B, G, G, A, C)
    }


def total_loss(
    raw: torch.Tensor,
    objectness: torch.Tensor,
    gt_boxes: torch.Tensor,
    class_probs: torch.Tensor,
    anchors: AnchorSet,
    geometry: GridGeometry,
    weights: LossWeights = LossWeights(),
) -> tuple[torch.Tensor, dict[str, float]]:
    """Batch loss = box * CIoU(assigned) + BCE(conf, all) + BCE(cls, assigned).

    All sums are normalized by batch size. Returns the scalar total plus
    the three components as floats.
    """
    decoded = decode_raw(raw, anchors, geometry)
    b = raw.shape[0]
    if objectness.shape != decoded["conf"].shape:
        raise ValueError(
            f"target shape {tuple(objectness.shape)} != prediction {tuple(decoded['conf'].shape)}"
        )
    pos = objectness > 0.5

    if pos.any():
        loc = ciou_terms(decoded["boxes"][pos], gt_boxes[pos]).sum() / b
        cls = _bce(decoded["cls"][pos], class_probs[pos]).sum() / b
    else:
        loc = raw.sum() * 0.0
        cls = raw.sum() * 0.0

    conf_bce = _bce(decoded["conf"], objectness)
    conf_weight = torch.where(
        pos,
        torch.as_tensor(weights.obj_pos, dtype=raw.dtype),
        torch.as_tensor(weights.obj_neg, dtype=raw.dtype),
    )
    conf = (conf_bce * conf_weight).sum() / b

    total = weights.box * loc + conf + weights.cls * cls
    return total, {
        "loc": float(loc.detach()),
        "conf": float(conf.detach()),
        "cls": float(cls.detach()),
    }
