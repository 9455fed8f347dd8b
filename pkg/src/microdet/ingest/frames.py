"""Frame extraction from video/image files and Otsu-based blur rejection.

Lens movement produces blurred frames whose gray-level histogram collapses;
their Otsu threshold drops well below that of sharp frames, so a cutoff on
the Otsu value acts as a cheap blur filter.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

log = logging.getLogger(__name__)

VIDEO_SUFFIXES = {".mp4", ".avi", ".mov", ".mkv"}
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}

DEFAULT_BLUR_CUTOFF = 10


class MediaDecodeError(RuntimeError):
    """Raised when a media file cannot be opened or decoded."""


class EmptyMediaError(RuntimeError):
    """Raised when a decodable source yields zero frames."""


@dataclass
class Frame:
    """One decoded frame. ``image`` is HxW (gray) or HxWx3 (BGR) uint8."""

    index: int
    image: np.ndarray
    source_id: str
    timestamp_s: float

    def __post_init__(self):
        if self.image.shape[0] <= 0 or self.image.shape[1] <= 0:
            raise ValueError("frame with empty raster")

    @property
    def gray(self) -> np.ndarray:
        if self.image.ndim == 2:
            return self.image
        return cv2.cvtColor(self.image, cv2.COLOR_BGR2GRAY)


def extract_frames(media: str | Path, fps_override: float | None = None) -> list[Frame]:
    """Decode a video or single image into ordered frames.

    A single image yields one frame with index 0. Timestamps are
    index / fps; ``fps_override`` replaces the container rate.
    """
    path = Path(media)
    if not path.exists():
        raise MediaDecodeError(f"media file not found: {path}")
    source_id = path.stem

    if path.suffix.lower() in IMAGE_SUFFIXES:
        image = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if image is None:
            raise MediaDecodeError(f"cannot decode image: {path}")
        return [Frame(0, image, source_id, 0.0)]

    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise MediaDecodeError(f"cannot open video: {path}")
    fps = fps_override if fps_override else cap.get(cv2.CAP_PROP_FPS)
    if not fps or fps <= 0:
        log.warning("no frame rate in %s; assuming 25 fps", path)
        fps = 25.0
    frames: list[Frame] = []
    while True:
        ok, image = cap.read()
        if not ok:
            break
        frames.append(Frame(len(frames), image, source_id, len(frames) / fps))
    cap.release()
    if not frames:
        raise EmptyMediaError(f"video decoded but contains no frames: {path}")
    return frames


def otsu_threshold(gray: np.ndarray) -> int:
    """Gray level maximizing between-class variance over the 256-bin histogram.

    Pixels <= t form the lower class. Ties break toward the lower level, so a
    single-intensity image maps to threshold 0.
    """
    if gray.dtype != np.uint8:
        raise ValueError(f"expected uint8 grayscale, got {gray.dtype}")
    hist = np.bincount(gray.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    p = hist / total
    omega = np.cumsum(p)
    mu = np.cumsum(p * np.arange(256))
    mu_total = mu[-1]
    denom = omega * (1.0 - omega)
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma_b = np.where(denom > 0.0, (mu_total * omega - mu) ** 2 / denom, 0.0)
    return int(np.argmax(sigma_b))


@dataclass
class FilterOutcome:
    kept: list[Frame]
    removed: int
    otsu_values: list[int]  # aligned with the input frame order


def filter_blurred(frames: list[Frame], otsu_cutoff: int = DEFAULT_BLUR_CUTOFF) -> FilterOutcome:
    """Keep frames whose Otsu threshold is at least the cutoff, order preserved.

    Removing everything is legal (the caller decides what to do); it only
    logs a warning.
    """
    if not frames:
        raise ValueError("filter_blurred needs at least one frame")
    if not 0 <= otsu_cutoff <= 255:
        raise ValueError(f"cutoff must be in [0, 255], got {otsu_cutoff}")
    values = [otsu_threshold(f.gray) for f in frames]
    kept = [f for f, v in zip(frames, values) if v >= otsu_cutoff]
    removed = len(frames) - len(kept)
    if not kept:
        log.warning("blur filter removed all %d frames (cutoff=%d)", len(frames), otsu_cutoff)
    return FilterOutcome(kept=kept, removed=removed, otsu_values=values)


def write_frame_manifest(
    path: str | Path,
    frames: list[Frame],
    outcome: FilterOutcome,
    frame_paths: dict[int, str],
) -> None:
    """Persist per-frame bookkeeping: source, index, file, otsu value, kept flag."""
    kept_indices = {f.index for f in outcome.kept}
    rows = [
        {
            "source_id": f.source_id,
            "index": f.index,
            "path": frame_paths.get(f.index, ""),
            "otsu_value": outcome.otsu_values[i],
            "kept": f.index in kept_indices,
        }
        for i, f in enumerate(frames)
    ]
    Path(path).write_text(json.dumps(rows, indent=2))
