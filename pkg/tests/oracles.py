"""Independent reference implementations used only by tests.

These deliberately re-derive results by brute force (exhaustive sweeps,
rational arithmetic, naive loops) so they share no code with the package
paths they check.
"""

from fractions import Fraction

import numpy as np


def brute_force_otsu(gray: np.ndarray) -> int:
    """Exhaustive 256-level between-class-variance sweep, low-tie-break."""
    best_t, best_v = 0, -1.0
    pix = gray.ravel().astype(np.float64)
    n = pix.size
    for t in range(256):
        lo = pix[pix <= t]
        hi = pix[pix > t]
        if lo.size == 0 or hi.size == 0:
            v = 0.0
        else:
            w0, w1 = lo.size / n, hi.size / n
            v = w0 * w1 * (lo.mean() - hi.mean()) ** 2
        if v > best_v + 1e-12:
            best_t, best_v = t, v
    return best_t


def exact_iou(a, b) -> Fraction:
    """Rational-arithmetic rectangle IoU."""
    ax1, ay1, ax2, ay2 = (Fraction(v) for v in a)
    bx1, by1, bx2, by2 = (Fraction(v) for v in b)
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return Fraction(0)
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union


def brute_force_diou_nms(boxes, scores, class_ids, provenance, threshold):
    """Quadratic-time greedy DIoU suppression; returns kept input indices."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], provenance[i]))
    kept = []
    for i in order:
        drop = False
        for j in kept:
            if class_ids[i] != class_ids[j]:
                continue
            ax1, ay1, ax2, ay2 = boxes[i]
            bx1, by1, bx2, by2 = boxes[j]
            iw = min(ax2, bx2) - max(ax1, bx1)
            ih = min(ay2, by2) - max(ay1, by1)
            inter = iw * ih if (iw > 0 and ih > 0) else 0.0
            union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
            iou = inter / union if union > 0 else 0.0
            cx_i, cy_i = (ax1 + ax2) / 2, (ay1 + ay2) / 2
            cx_j, cy_j = (bx1 + bx2) / 2, (by1 + by2) / 2
            ew = max(ax2, bx2) - min(ax1, bx1)
            eh = max(ay2, by2) - min(ay1, by1)
            c2 = ew * ew + eh * eh
            diou = iou - ((cx_i - cx_j) ** 2 + (cy_i - cy_j) ** 2) / c2 if c2 > 0 else iou
            if diou > threshold:
                drop = True
                break
        if not drop:
            kept.append(i)
    return kept
