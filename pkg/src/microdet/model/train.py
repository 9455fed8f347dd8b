"""Two-phase training: frozen-backbone warmup, then full fine-tuning.

Each phase runs Adam with cosine-annealed learning rate and stops early
when validation loss fails to improve for ``patience`` epochs. The best
validation weights seen across both phases are restored at the end.
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..ingest.anchors import AnchorSet
from .data import DetectionSample
from .encode import GridGeometry
from .losses import LossWeights, total_loss
from .net import DetectorNet

log = logging.getLogger(__name__)

HISTORY_FIELDS = [
    "epoch", "phase", "lr",
    "train_loss", "train_loc", "train_conf", "train_cls",
    "val_loss", "val_loc", "val_conf", "val_cls",
]


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainSchedule:
    """Production defaults: 50 frozen epochs at batch 16 / lr 1e-3, then 100
    full epochs at batch 4 / lr 1e-4, cosine annealing within each phase."""

    phase1_epochs: int = 50
    phase1_batch: int = 16
    phase1_lr: float = 1e-3
    phase2_epochs: int = 100
    phase2_batch: int = 4
    phase2_lr: float = 1e-4
    patience: int = 10
    eta_min_factor: float = 0.05

    def __post_init__(self):
        if self.phase1_epochs < 0 or self.phase2_epochs < 0:
            raise ValueError("epoch counts must be >= 0")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")


@dataclass
class TrainResult:
    history: list[dict] = field(default_factory=list)
    best_val_loss: float = math.inf
    best_epoch: int = -1
    epochs_run: int = 0
    # CPU float64/float32 kernels are bit-deterministic for a fixed seed and
    # thread count; repeat runs must agree to this tolerance.
    loss_repeatability_tol: float = 0.0

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=HISTORY_FIELDS)
            writer.writeheader()
            writer.writerows(self.history)


def _prepare(samples, anchors, geometry):
    """Letterbox and transform once per sample; flips/encoding run per batch."""
    from ..boxes import Annotation
    from .data import prepare_input

    prepared = []
    for s in samples:
        x, lb = prepare_input(s.image, geometry.input_size)
        net_anns = [
            Annotation(lb.apply_box(a.box), a.class_id, a.source_id, a.frame_index)
            for a in s.annotations
        ]
        prepared.append((x, net_anns))
    return prepared


def _flip_annotation(ann, size, flip_h, flip_v):
    from ..boxes import Annotation, Box

    b = ann.box
    x1, x2 = (size - b.x_max, size - b.x_min) if flip_h else (b.x_min, b.x_max)
    y1, y2 = (size - b.y_max, size - b.y_min) if flip_v else (b.y_min, b.y_max)
    return Annotation(Box(x1, y1, x2, y2), ann.class_id, ann.source_id, ann.frame_index)


def _stack(prepared, indices, anchors, geometry, flips=None):
    """Assemble a batch; ``flips`` is an optional (flip_h, flip_v) per index."""
    from .encode import encode_targets

    size = geometry.input_size
    xs, objs, boxes, cls = [], [], [], []
    for pos, i in enumerate(indices):
        x, net_anns = prepared[i]
        flip_h, flip_v = flips[pos] if flips is not None else (False, False)
        if flip_h or flip_v:
            axes = tuple(
                ax for ax, on in ((2, flip_h), (1, flip_v)) if on
            )
            x = np.ascontiguousarray(np.flip(x, axis=axes))
            net_anns = [_flip_annotation(a, size, flip_h, flip_v) for a in net_anns]
        t = encode_targets(net_anns, anchors, geometry)
        xs.append(x)
        objs.append(t.objectness.astype(np.float32))
        boxes.append(t.gt_boxes.astype(np.float32))
        cls.append(t.class_probs.astype(np.float32))
    return (
        torch.from_numpy(np.stack(xs)),
        {
            "objectness": torch.from_numpy(np.stack(objs)),
            "gt_boxes": torch.from_numpy(np.stack(boxes)),
            "class_probs": torch.from_numpy(np.stack(cls)),
        },
    )


def _evaluate(model, prepared, batch, anchors, geometry, weights):
    model.eval()
    total = 0.0
    comps = {"loc": 0.0, "conf": 0.0, "cls": 0.0}
    n_batches = 0
    with torch.no_grad():
        for start in range(0, len(prepared), batch):
            x, t = _stack(
                prepared, range(start, min(start + batch, len(prepared))),
                anchors, geometry,
            )
            loss, c = total_loss(
                model(x), t["objectness"], t["gt_boxes"], t["class_probs"],
                anchors, geometry, weights,
            )
            total += float(loss)
            for k in comps:
                comps[k] += c[k]
            n_batches += 1
    n_batches = max(n_batches, 1)
    return total / n_batches, {k: v / n_batches for k, v in comps.items()}


def _dump_divergence(dump_dir, epoch, batch_indices, components):
    if dump_dir is None:
        return None
    path = Path(dump_dir) / f"diverged_epoch{epoch}.json"
    path.write_text(json.dumps({
        "epoch": epoch,
        "batch_sample_indices": [int(i) for i in batch_indices],
        "components": components,
    }, indent=2))
    return path


def train(
    model: DetectorNet,
    train_samples: list[DetectionSample],
    val_samples: list[DetectionSample],
    anchors: AnchorSet,
    schedule: TrainSchedule = TrainSchedule(),
    seed: int = 0,
    weights: LossWeights = LossWeights(),
    dump_dir: str | Path | None = None,
    augment: bool = True,
) -> TrainResult:
    if not train_samples or not val_samples:
        raise ValueError("train and validation sets must be non-empty")
    torch.manual_seed(seed)
    shuffle_rng = np.random.default_rng(seed)
    geometry = GridGeometry(model.config.input_size, model.config.stride)
    train_prep = _prepare(train_samples, anchors, geometry)
    val_prep = _prepare(val_samples, anchors, geometry)

    result = TrainResult()
    best_state: dict | None = None
    global_epoch = 0

    phases = [
        (1, True, schedule.phase1_epochs, schedule.phase1_batch, schedule.phase1_lr),
        (2, False, schedule.phase2_epochs, schedule.phase2_batch, schedule.phase2_lr),
    ]
    for phase, frozen, epochs, batch, lr in phases:
        if epochs == 0:
            continue
        model.set_backbone_frozen(frozen)
        params = [p for p in model.parameters() if p.requires_grad]
        optimizer = torch.optim.Adam(params, lr=lr)
        scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(
            optimizer, T_max=epochs, eta_min=lr * schedule.eta_min_factor
        )
        phase_best = math.inf
        bad_epochs = 0
        for _ in range(epochs):
            model.train()
            order = shuffle_rng.permutation(len(train_prep))
            sums = {"loss": 0.0, "loc": 0.0, "conf": 0.0, "cls": 0.0}
            n_batches = 0
            current_lr = optimizer.param_groups[0]["lr"]
            flips = (
                shuffle_rng.integers(0, 2, size=(len(order), 2)).astype(bool)
                if augment
                else None
            )
            for start in range(0, len(order), batch):
                idx = order[start : start + batch]
                x, t = _stack(
                    train_prep, idx, anchors, geometry,
                    flips=None if flips is None else flips[start : start + batch],
                )
                loss, comps = total_loss(
                    model(x), t["objectness"], t["gt_boxes"], t["class_probs"],
                    anchors, geometry, weights,
                )
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                sums["loss"] += float(loss.detach())
                for k in ("loc", "conf", "cls"):
                    sums[k] += comps[k]
                n_batches += 1
            scheduler.step()
            global_epoch += 1

            val_loss, val_comps = _evaluate(model, val_prep, batch, anchors, geometry, weights)
            if math.isnan(val_loss) or math.isinf(val_loss):
                dump = _dump_divergence(dump_dir, global_epoch, order[:batch], val_comps)
                raise TrainingDiverged(
                    f"validation loss {val_loss} at epoch {global_epoch}"
                    + (f"; diagnostics in {dump}" if dump else "")
                )

            result.history.append({
                "epoch": global_epoch,
                "phase": phase,
                "lr": current_lr,
                "train_loss": sums["loss"] / n_batches,
                "train_loc": sums["loc"] / n_batches,
                "train_conf": sums["conf"] / n_batches,
                "train_cls": sums["cls"] / n_batches,
                "val_loss": val_loss,
                "val_loc": val_comps["loc"],
                "val_conf": val_comps["conf"],
                "val_cls": val_comps["cls"],
            })

            if val_loss < result.best_val_loss:
                result.best_val_loss = val_loss
                result.best_epoch = global_epoch
                best_state = copy.deepcopy(model.state_dict())
            if val_loss < phase_best:
                phase_best = val_loss
                bad_epochs = 0
            else:
                bad_epochs += 1
                if bad_epochs > schedule.patience:
                    log.info("phase %d early stop at epoch %d", phase, global_epoch)
                    break

    result.epochs_run = global_epoch
    if best_state is not None:
        model.load_state_dict(best_state)
    model.set_backbone_frozen(False)
    model.eval()
    return result
