"""Anchor prior fitting: k-means over box (w, h) under the 1 - IoU distance.

Boxes and centroids are compared centered at the origin, so only shape
matters. Multiple k-means++ restarts are run per call and the lowest-cost
centroid set wins; everything is deterministic in the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

N_ANCHORS_DEFAULT = 6
MAX_ITER = 300
N_RESTARTS = 30


class DegenerateBoxesError(ValueError):
    """Fewer distinct box shapes than requested clusters."""


@dataclass(frozen=True)
class AnchorSet:
    """Ordered (w, h) priors in input-resolution pixels, ascending by area.

    The detector head consumes exactly six; smaller k is allowed here for
    diagnostics and tests.
    """

    anchors: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for w, h in self.anchors:
            if w <= 0 or h <= 0:
                raise ValueError(f"non-positive anchor ({w}, {h})")
        areas = [w * h for w, h in self.anchors]
        if areas != sorted(areas):
            raise ValueError("anchors must be sorted ascending by area")

    def __len__(self) -> int:
        return len(self.anchors)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.anchors, dtype=np.float64)

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps([[w, h] for w, h in self.anchors], indent=2))

    @classmethod
    def from_json(cls, path: str | Path) -> "AnchorSet":
        data = json.loads(Path(path).read_text())
        return cls(tuple((float(w), float(h)) for w, h in data))

    @classmethod
    def from_array(cls, arr) -> "AnchorSet":
        ordered = sorted(((float(w), float(h)) for w, h in arr), key=lambda a: (a[0] * a[1], a[0]))
        return cls(tuple(ordered))


def wh_iou(boxes: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(N, 2) x (K, 2) -> (N, K) IoU with both rectangles centered at origin."""
    inter = np.minimum(boxes[:, None, :], centers[None, :, :]).prod(axis=2)
    union = boxes.prod(axis=1)[:, None] + centers.prod(axis=1)[None, :] - inter
    return inter / union


def anchor_cost(boxes: np.ndarray, centers: np.ndarray) -> float:
    """Total within-cluster 1 - IoU cost for the best-center assignment."""
    return float((1.0 - wh_iou(boxes, centers).max(axis=1)).sum())


def _kmeans_pp_init(boxes: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [boxes[rng.integers(len(boxes))]]
    for _ in range(1, k):
        d = 1.0 - wh_iou(boxes, np.asarray(centers)).max(axis=1)
        total = d.sum()
        if total <= 0:
            centers.append(boxes[rng.integers(len(boxes))])
            continue
        centers.append(boxes[rng.choice(len(boxes), p=d / total)])
    return np.asarray(centers, dtype=np.float64)


def _lloyd(boxes: np.ndarray, centers: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    assignment = np.full(len(boxes), -1, dtype=np.int64)
    for _ in range(MAX_ITER):
        new_assignment = wh_iou(boxes, centers).argmax(axis=1)
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for c in range(len(centers)):
            members = boxes[assignment == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:
                # reseed an empty cluster to the currently worst-fit box
                d = 1.0 - wh_iou(boxes, centers).max(axis=1)
                centers[c] = boxes[int(d.argmax())]
    return centers


def cluster_anchors(
    boxes,
    k: int = N_ANCHORS_DEFAULT,
    seed: int = 0,
    restarts: int = N_RESTARTS,
) -> AnchorSet:
    """Fit k anchor priors to (w, h) pairs; deterministic for a fixed seed.

    The returned set is the lowest-cost of ``restarts`` k-means++ runs.
    Input order does not matter: boxes are canonicalized before seeding.
    """
    arr = np.asarray(sorted((float(w), float(h)) for w, h in boxes), dtype=np.float64)
    if len(arr) < k:
        raise DegenerateBoxesError(f"need at least k={k} boxes, got {len(arr)}")
    if np.any(arr <= 0):
        raise ValueError("boxes must have positive width and height")
    if len(np.unique(arr, axis=0)) < k:
        raise DegenerateBoxesError(
            f"only {len(np.unique(arr, axis=0))} distinct box shapes for k={k}; reduce k"
        )

    best_centers: np.ndarray | None = None
    best_cost = np.inf
    seeds = np.random.SeedSequence(seed).spawn(restarts)
    for child in seeds:
        rng = np.random.default_rng(child)
        centers = _lloyd(arr, _kmeans_pp_init(arr, k, rng), rng)
        cost = anchor_cost(arr, centers)
        if cost < best_cost - 1e-12:
            best_cost = cost
            best_centers = centers.copy()
    assert best_centers is not None
    return AnchorSet.from_array(best_centers)
