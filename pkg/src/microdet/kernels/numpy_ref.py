"""Pure-NumPy reference implementations of the hot box kernels.

Used automatically when the compiled extension is unavailable; also the
baseline side of the kernel benchmark. Formulas mirror ``_core.pyx``
expression-for-expression so both backends agree bitwise.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU of corner-form boxes: (N, 4) x (M, 4) -> (N, M).

    Zero-area boxes produce zero rows/columns rather than NaN.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    iw = np.clip(iw, 0.0, None)
    ih = np.clip(ih, 0.0, None)
    inter = iw * ih
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0.0)
    return out


def diou_nms(boxes: np.ndarray, class_ids: np.ndarray, threshold: float) -> np.ndarray:
    """Greedy distance-IoU suppression over priority-ordered boxes.

    ``boxes`` is (N, 4) corner form, already sorted by descending priority.
    A candidate is dropped when DIoU = IoU - rho^2/c^2 against any kept box
    of the same class exceeds ``threshold``. Returns kept positions
    (indices into the sorted input) in order.
    """
    boxes = np.asarray(boxes, dtype=np.float64)
    class_ids = np.asarray(class_ids, dtype=np.int64)
    n = boxes.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)

    cx = (boxes[:, 0] + boxes[:, 2]) / 2.0
    cy = (boxes[:, 1] + boxes[:, 3]) / 2.0
    areas = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])

    keep: list[int] = []
    suppressed = np.zeros(n, dtype=bool)
    for i in range(n):
        if suppressed[i]:
            continue
        keep.append(i)
        for j in range(i + 1, n):
            if suppressed[j] or class_ids[j] != class_ids[i]:
                continue
            iw = min(boxes[i, 2], boxes[j, 2]) - max(boxes[i, 0], boxes[j, 0])
            ih = min(boxes[i, 3], boxes[j, 3]) - max(boxes[i, 1], boxes[j, 1])
            inter = iw * ih if (iw > 0.0 and ih > 0.0) else 0.0
            union = areas[i] + areas[j] - inter
            iou = inter / union if union > 0.0 else 0.0
            ew = max(boxes[i, 2], boxes[j, 2]) - min(boxes[i, 0], boxes[j, 0])
            eh = max(boxes[i, 3], boxes[j, 3]) - min(boxes[i, 1], boxes[j, 1])
            c2 = ew * ew + eh * eh
            rho2 = (cx[i] - cx[j]) ** 2 + (cy[i] - cy[j]) ** 2
            diou = iou - rho2 / c2 if c2 > 0.0 else iou
            if diou > threshold:
                suppressed[j] = True
    return np.asarray(keep, dtype=np.int64)
