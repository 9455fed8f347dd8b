"""Self-describing weight checkpoints: state dict + model config + anchors."""

from __future__ import annotations

import dataclasses
from pathlib import Path

import torch

from ..ingest.anchors import AnchorSet
from .net import DetectorNet, ModelConfig, build_model

FORMAT_VERSION = 1


def save_checkpoint(
    path: str | Path,
    model: DetectorNet,
    anchors: AnchorSet,
    meta: dict | None = None,
) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "config": dataclasses.asdict(model.config),
        "anchors": [[w, h] for w, h in anchors.anchors],
        "state_dict": model.state_dict(),
        "meta": meta or {},
    }
    torch.save(payload, str(path))


def load_checkpoint(path: str | Path) -> tuple[DetectorNet, AnchorSet, dict]:
    payload = torch.load(str(path), map_location="cpu", weights_only=False)
    if payload.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format in {path}")
    cfg_dict = dict(payload["config"])
    for key in ("channel_plan", "res_block_counts", "spp_pool_sizes"):
        cfg_dict[key] = tuple(cfg_dict[key])
    config = ModelConfig(**cfg_dict)
    model = build_model(config)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    anchors = AnchorSet(tuple((float(w), float(h)) for w, h in payload["anchors"]))
    if len(anchors) != config.n_anchors:
        raise ValueError("checkpoint anchors inconsistent with model config")
    return model, anchors, payload["meta"]
