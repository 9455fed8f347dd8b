"""Axis-aligned boxes, annotations, detections and the letterbox transform.

Boxes are stored corner-form (x_min, y_min, x_max, y_max) in pixels unless a
function says otherwise; center-form helpers convert to (cx, cy, w, h).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CLASS_NAMES = ("sperm", "impurity")
CLASS_IDS = {name: i for i, name in enumerate(CLASS_NAMES)}


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle, corner form, pixels."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"degenerate box: ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> "Box":
        return cls(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)

    def clamped(self, width: float, height: float) -> "Box":
        """Clip to an image of the given size; raises if nothing remains."""
        return Box(
            min(max(self.x_min, 0.0), width),
            min(max(self.y_min, 0.0), height),
            max(min(self.x_max, width), 0.0),
            max(min(self.y_max, height), 0.0),
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return self.x_min, self.y_min, self.x_max, self.y_max


@dataclass(frozen=True)
class Annotation:
    """Ground-truth object on one frame."""

    box: Box
    class_id: int
    source_id: str = ""
    frame_index: int = 0

    def __post_init__(self):
        if self.class_id not in (0, 1):
            raise ValueError(f"class_id must be 0 or 1, got {self.class_id}")


@dataclass(frozen=True)
class Detection:
    """Model output box in source-image pixels with confidence in [0, 1]."""

    box: Box
    class_id: int
    confidence: float
    source_id: str = ""
    frame_index: int = 0
    # flattened (cell_y, cell_x, anchor) ordinal; deterministic tie-breaker
    provenance: int = 0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence outside [0, 1]: {self.confidence}")


def boxes_to_array(items) -> np.ndarray:
    """Stack Box/.box objects into an (N, 4) float64 corner array."""
    out = np.empty((len(items), 4), dtype=np.float64)
    for i, item in enumerate(items):
        b = item if isinstance(item, Box) else item.box
        out[i] = b.as_tuple()
    return out


def box_iou(a: Box, b: Box) -> float:
    """Scalar IoU of two boxes; 0 when disjoint or either has zero area."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def center_distance(a: Box, b: Box) -> float:
    (ax, ay), (bx, by) = a.center, b.center
    return math.hypot(ax - bx, ay - by)


@dataclass(frozen=True)
class LetterboxTransform:
    """Aspect-preserving resize plus padding into a square network input."""

    src_width: int
    src_height: int
    input_size: int
    scale: float = field(init=False)
    pad_x: float = field(init=False)
    pad_y: float = field(init=False)

    def __post_init__(self):
        scale = self.input_size / max(self.src_width, self.src_height)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "pad_x", (self.input_size - self.src_width * scale) / 2.0)
        object.__setattr__(self, "pad_y", (self.input_size - self.src_height * scale) / 2.0)

    def apply_image(self, image: np.ndarray, pad_value: int = 114) -> np.ndarray:
        import cv2

        new_w = round(self.src_width * self.scale)
        new_h = round(self.src_height * self.scale)
        resized = cv2.resize(image, (new_w, new_h), interpolation=cv2.INTER_LINEAR)
        canvas = np.full((self.input_size, self.input_size, 3), pad_value, dtype=image.dtype)
        x0, y0 = round(self.pad_x), round(self.pad_y)
        canvas[y0 : y0 + new_h, x0 : x0 + new_w] = (
            resized if resized.ndim == 3 else resized[..., None]
        )
        return canvas

    def apply_box(self, box: Box) -> Box:
        return Box(
            box.x_min * self.scale + self.pad_x,
            box.y_min * self.scale + self.pad_y,
            box.x_max * self.scale + self.pad_x,
            box.y_max * self.scale + self.pad_y,
        )

    def invert_box(self, box: Box) -> Box:
        return Box(
            (box.x_min - self.pad_x) / self.scale,
            (box.y_min - self.pad_y) / self.scale,
            (box.x_max - self.pad_x) / self.scale,
            (box.y_max - self.pad_y) / self.scale,
        )

    def invert_corners(self, xyxy: np.ndarray) -> np.ndarray:
        out = xyxy.astype(np.float64, copy=True)
        out[:, [0, 2]] = (out[:, [0, 2]] - self.pad_x) / self.scale
        out[:, [1, 3]] = (out[:, [1, 3]] - self.pad_y) / self.scale
        return out
