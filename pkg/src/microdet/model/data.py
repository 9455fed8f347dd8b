"""Dataset plumbing: pairing frames with VOC files, letterboxing, batching.

Frame/annotation pairs are matched by file stem (``<source>_<index>``, the
layout the scene writer and preprocess command emit). Images are kept as
uint8 until batch time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np
import torch

from ..boxes import Annotation, LetterboxTransform
from ..ingest.anchors import AnchorSet
from ..ingest.frames import Frame
from ..ingest.voc import load_voc_annotations
from .encode import GridGeometry, TargetTensor, encode_targets

STEM_RE = re.compile(r"^(?P<source>.+?)_(?P<index>\d+)$")


@dataclass
class DetectionSample:
    image: np.ndarray                 # HxWx3 uint8, source resolution
    annotations: list[Annotation]     # source-pixel coordinates
    source_id: str
    frame_index: int


def split_stem(stem: str) -> tuple[str, int]:
    m = STEM_RE.match(stem)
    if m:
        return m.group("source"), int(m.group("index"))
    return stem, 0


def load_samples_from_dirs(frames_dir: str | Path, voc_dir: str | Path) -> list[DetectionSample]:
    frames_dir, voc_dir = Path(frames_dir), Path(voc_dir)
    samples = []
    for png in sorted(frames_dir.glob("*.png")):
        source_id, frame_index = split_stem(png.stem)
        image = cv2.imread(str(png), cv2.IMREAD_COLOR)
        if image is None:
            raise RuntimeError(f"cannot decode frame {png}")
        xml = voc_dir / f"{png.stem}.xml"
        anns = (
            load_voc_annotations(xml, source_id=source_id, frame_index=frame_index)
            if xml.exists()
            else []
        )
        samples.append(DetectionSample(image, anns, source_id, frame_index))
    return samples


def samples_from_frames(frames: list[Frame], annotations: list[Annotation]) -> list[DetectionSample]:
    by_frame: dict[tuple[str, int], list[Annotation]] = {}
    for a in annotations:
        by_frame.setdefault((a.source_id, a.frame_index), []).append(a)
    return [
        DetectionSample(
            image=f.image if f.image.ndim == 3 else np.repeat(f.image[:, :, None], 3, axis=2),
            annotations=by_frame.get((f.source_id, f.index), []),
            source_id=f.source_id,
            frame_index=f.index,
        )
        for f in frames
    ]


def prepare_input(image: np.ndarray, input_size: int) -> tuple[np.ndarray, LetterboxTransform]:
    """Letterbox to the square network input and scale to [0, 1] floats."""
    h, w = image.shape[:2]
    lb = LetterboxTransform(src_width=w, src_height=h, input_size=input_size)
    canvas = lb.apply_image(image if image.ndim == 3 else image[:, :, None])
    return canvas.astype(np.float32).transpose(2, 0, 1) / 255.0, lb


def encode_sample(
    sample: DetectionSample, anchors: AnchorSet, geometry: GridGeometry
) -> tuple[np.ndarray, TargetTensor, LetterboxTransform]:
    x, lb = prepare_input(sample.image, geometry.input_size)
    net_anns = [
        Annotation(lb.apply_box(a.box), a.class_id, a.source_id, a.frame_index)
        for a in sample.annotations
    ]
    target = encode_targets(net_anns, anchors, geometry)
    return x, target, lb


def collate(
    samples: list[DetectionSample], anchors: AnchorSet, geometry: GridGeometry
) -> tuple[torch.Tensor, dict[str, torch.Tensor]]:
    """Stack a minibatch into (x, targets) torch tensors."""
    xs, objs, boxes, cls = [], [], [], []
    for s in samples:
        x, t, _ = encode_sample(s, anchors, geometry)
        xs.append(x)
        objs.append(t.objectness)
        boxes.append(t.gt_boxes)
        cls.append(t.class_probs)
    return (
        torch.from_numpy(np.stack(xs)),
        {
            "objectness": torch.from_numpy(np.stack(objs)).float(),
            "gt_boxes": torch.from_numpy(np.stack(boxes)).float(),
            "class_probs": torch.from_numpy(np.stack(cls)).float(),
        },
    )
