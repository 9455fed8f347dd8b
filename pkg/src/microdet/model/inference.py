"""Batched inference wrapper turning frames into post-NMS detections."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from ..boxes import Detection
from ..ingest.anchors import AnchorSet
from ..ingest.frames import Frame
from ..postprocess import (
    DEFAULT_CONF_THRESHOLD,
    DEFAULT_NMS_THRESHOLD,
    GridPrediction,
    decode,
    diou_nms,
)
from .checkpoint import load_checkpoint
from .data import prepare_input
from .encode import GridGeometry
from .net import DetectorNet


class Detector:
    """An immutable evaluation-mode model shared across calls."""

    def __init__(self, model: DetectorNet, anchors: AnchorSet):
        self.model = model.eval()
        self.anchors = anchors
        self.config = model.config
        self.geometry = GridGeometry(self.config.input_size, self.config.stride)

    @classmethod
    def from_checkpoint(cls, path: str | Path) -> "Detector":
        model, anchors, _ = load_checkpoint(path)
        return cls(model, anchors)

    @torch.no_grad()
    def predict_grids(self, frames: list[Frame], batch_size: int = 8) -> list[GridPrediction]:
        """Raw per-frame grid outputs with letterbox geometry attached."""
        grids: list[GridPrediction] = []
        for start in range(0, len(frames), batch_size):
            chunk = frames[start : start + batch_size]
            inputs, lbs = [], []
            for f in chunk:
                image = f.image if f.image.ndim == 3 else np.repeat(f.image[:, :, None], 3, axis=2)
                x, lb = prepare_input(image, self.config.input_size)
                inputs.append(x)
                lbs.append(lb)
            raw = self.model(torch.from_numpy(np.stack(inputs)))
            g = self.config.grid_size
            a = self.config.n_anchors
            # (B, A*7, G, G) -> (B, G, G, A*7) with anchor-major channel layout
            arranged = raw.view(len(chunk), a, 7, g, g).permute(0, 3, 4, 1, 2)
            arranged = arranged.reshape(len(chunk), g, g, a * 7).numpy()
            for i, f in enumerate(chunk):
                grids.append(
                    GridPrediction(
                        tensor=arranged[i],
                        geometry=self.geometry,
                        letterbox=lbs[i],
                        source_id=f.source_id,
                        frame_index=f.index,
                    )
                )
        return grids

    def detect_frames(
        self,
        frames: list[Frame],
        conf_threshold: float = DEFAULT_CONF_THRESHOLD,
        nms_threshold: float = DEFAULT_NMS_THRESHOLD,
        batch_size: int = 8,
    ) -> list[list[Detection]]:
        """Per-frame detections after decoding and class-wise DIoU suppression."""
        return [
            diou_nms(decode(grid, self.anchors, conf_threshold), nms_threshold)
            for grid in self.predict_grids(frames, batch_size)
        ]
