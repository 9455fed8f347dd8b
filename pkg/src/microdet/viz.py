"""Overlay rendering: boxes burned into frames for quick inspection.

Color scheme: ground truth blue; detections green when correct and red
when not (class-tinted when no ground truth is supplied).
"""

from __future__ import annotations

import cv2
import numpy as np

from .boxes import Annotation, Detection

COLOR_GT = (255, 128, 0)      # BGR blue-ish
COLOR_TP = (0, 200, 0)
COLOR_FP = (0, 0, 230)
COLOR_CLASS = {0: (0, 200, 0), 1: (0, 165, 255)}


def _rect(image, box, color, thickness=1):
    h, w = image.shape[:2]
    x1 = int(max(0, min(round(box.x_min), w - 1)))
    y1 = int(max(0, min(round(box.y_min), h - 1)))
    x2 = int(max(0, min(round(box.x_max), w - 1)))
    y2 = int(max(0, min(round(box.y_max), h - 1)))
    cv2.rectangle(image, (x1, y1), (x2, y2), color, thickness)


def render_overlay(
    image: np.ndarray,
    detections: list[Detection],
    ground_truth: list[Annotation] | None = None,
    tp_flags: list[bool] | None = None,
) -> np.ndarray:
    """Return a copy of the frame with boxes drawn on it."""
    canvas = image.copy() if image.ndim == 3 else cv2.cvtColor(image, cv2.COLOR_GRAY2BGR)
    if ground_truth:
        for gt in ground_truth:
            _rect(canvas, gt.box, COLOR_GT)
    for i, det in enumerate(detections):
        if tp_flags is not None:
            color = COLOR_TP if tp_flags[i] else COLOR_FP
        else:
            color = COLOR_CLASS.get(det.class_id, COLOR_TP)
        _rect(canvas, det.box, color)
    return canvas
