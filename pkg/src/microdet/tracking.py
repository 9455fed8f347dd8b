"""Detection-to-trajectory association and CASA motility parameters.

Association is frame-to-frame nearest neighbor on box centers with a
distance gate: eligible (track, detection) pairs are assigned in ascending
distance order (the global minimum pair is always mutually nearest), ties
broken by track age then detection file order. Unmatched detections open
new trajectories; a trajectory ends after more than ``max_gap`` consecutive
missing frames.

Velocities: VSL is net displacement over elapsed time, VCL the polyline
length, VAP the polyline length of the moving-average path (complete
windows only, so a straight track gives identical values for all three).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .boxes import Detection

DEFAULT_GATE_PX = 20.0
DEFAULT_MAX_GAP = 2
DEFAULT_SMOOTH_WINDOW = 5
DEFAULT_VAP_MIN_UM_S = 25.0


@dataclass
class Trajectory:
    object_id: int
    class_id: int
    samples: list[tuple[int, float, float]]  # (frame_index, cx, cy)
    gaps: int = 0

    def __post_init__(self):
        frames = [f for f, _, _ in self.samples]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError("trajectory frames must be strictly increasing")


@dataclass(frozen=True)
class MotilityThresholds:
    """A track is motile when every configured minimum is met."""

    vap_min: float | None = DEFAULT_VAP_MIN_UM_S
    vsl_min: float | None = None
    vcl_min: float | None = None

    def is_motile(self, vsl: float, vcl: float, vap: float) -> bool:
        checks = [
            (self.vap_min, vap),
            (self.vsl_min, vsl),
            (self.vcl_min, vcl),
        ]
        return all(value >= minimum for minimum, value in checks if minimum is not None)


@dataclass
class MotilityEntry:
    object_id: int
    class_id: int
    n_samples: int
    vsl: float
    vcl: float
    vap: float
    unit: str
    motile: bool


@dataclass
class MotilityReport:
    entries: list[MotilityEntry]
    excluded: list[tuple[int, str]]
    progressive_ratio: float | None
    thresholds: MotilityThresholds
    unit: str

    def to_dict(self) -> dict:
        return {
            "unit": self.unit,
            "progressive_ratio": self.progressive_ratio,
            "thresholds": {
                "vap_min": self.thresholds.vap_min,
                "vsl_min": self.thresholds.vsl_min,
                "vcl_min": self.thresholds.vcl_min,
            },
            "excluded": [{"object_id": i, "reason": r} for i, r in self.excluded],
            "entries": [e.__dict__ for e in self.entries],
        }


def associate(
    per_frame_dets: list[list[Detection]],
    gate_px: float = DEFAULT_GATE_PX,
    max_gap: int = DEFAULT_MAX_GAP,
) -> list[Trajectory]:
    """Group per-frame detections (ordered by frame) into trajectories."""
    if gate_px <= 0:
        raise ValueError("gate_px must be positive")
    active: list[dict] = []
    finished: list[dict] = []
    next_id = 0

    for frame_dets in per_frame_dets:
        if not frame_dets:
            continue
        frame = frame_dets[0].frame_index
        still_active = []
        for tr in active:
            if frame - tr["last_frame"] > max_gap + 1:
                finished.append(tr)
            else:
                still_active.append(tr)
        active = still_active

        # eligible pairs in ascending (distance, track order, file order)
        pairs = []
        for ti, tr in enumerate(active):
            _, lx, ly = tr["samples"][-1]
            for di, det in enumerate(frame_dets):
                if det.class_id != tr["class_id"]:
                    continue
                cx, cy = det.box.center
                d = math.hypot(cx - lx, cy - ly)
                if d <= gate_px:
                    pairs.append((d, ti, di))
        pairs.sort()
        used_tracks: set[int] = set()
        used_dets: set[int] = set()
        for d, ti, di in pairs:
            if ti in used_tracks or di in used_dets:
                continue
            used_tracks.add(ti)
            used_dets.add(di)
            tr = active[ti]
            cx, cy = frame_dets[di].box.center
            tr["gaps"] += frame - tr["last_frame"] - 1
            tr["samples"].append((frame, cx, cy))
            tr["last_frame"] = frame

        for di, det in enumerate(frame_dets):
            if di in used_dets:
                continue
            cx, cy = det.box.center
            active.append(
                {
                    "id": next_id,
                    "class_id": det.class_id,
                    "samples": [(frame, cx, cy)],
                    "last_frame": frame,
                    "gaps": 0,
                }
            )
            next_id += 1

    finished.extend(active)
    # canonical numbering by start frame and start position, so the output
    # does not depend on within-frame detection order
    finished.sort(
        key=lambda tr: (
            tr["samples"][0][0],
            round(tr["samples"][0][2], 6),
            round(tr["samples"][0][1], 6),
            tr["class_id"],
        )
    )
    return [
        Trajectory(i, tr["class_id"], tr["samples"], tr["gaps"])
        for i, tr in enumerate(finished)
    ]


def group_by_frame(dets: list[Detection]) -> list[list[Detection]]:
    """Bucket a flat detection list by frame index, preserving file order."""
    buckets: dict[int, list[Detection]] = {}
    for d in dets:
        buckets.setdefault(d.frame_index, []).append(d)
    return [buckets[k] for k in sorted(buckets)]


def motility(
    traj: Trajectory,
    fps: float,
    um_per_px: float | None = None,
    smooth_window: int = DEFAULT_SMOOTH_WINDOW,
) -> tuple[float, float, float, str]:
    """(VSL, VCL, VAP, unit) for one trajectory; needs >= 2 samples."""
    n = len(traj.samples)
    if n < 2:
        raise ValueError("motility needs a trajectory with at least 2 samples")
    if smooth_window < 1 or smooth_window % 2 == 0:
        raise ValueError("smooth_window must be odd and >= 1")
    scale = um_per_px if um_per_px else 1.0
    unit = "um/s" if um_per_px else "px/s"

    frames = [f for f, _, _ in traj.samples]
    pts = [(x, y) for _, x, y in traj.samples]
    elapsed = (frames[-1] - frames[0]) / fps
    vsl = math.dist(pts[0], pts[-1]) / elapsed * scale
    vcl = sum(math.dist(pts[i], pts[i + 1]) for i in range(n - 1)) / elapsed * scale

    w = min(smooth_window, n if n % 2 == 1 else n - 1)
    means = [
        (
            sum(p[0] for p in pts[i : i + w]) / w,
            sum(p[1] for p in pts[i : i + w]) / w,
        )
        for i in range(n - w + 1)
    ]
    if len(means) < 2:
        vap = vcl
    else:
        half = (w - 1) // 2
        span = (frames[n - 1 - half] - frames[half]) / fps
        path = sum(math.dist(means[i], means[i + 1]) for i in range(len(means) - 1))
        vap = path / span * scale
    return vsl, vcl, vap, unit


def build_motility_report(
    trajectories: list[Trajectory],
    fps: float,
    um_per_px: float | None = None,
    smooth_window: int = DEFAULT_SMOOTH_WINDOW,
    thresholds: MotilityThresholds = MotilityThresholds(),
) -> MotilityReport:
    entries: list[MotilityEntry] = []
    excluded: list[tuple[int, str]] = []
    for traj in trajectories:
        if len(traj.samples) < 2:
            excluded.append((traj.object_id, "single-sample trajectory"))
            continue
        vsl, vcl, vap, unit = motility(traj, fps, um_per_px, smooth_window)
        entries.append(
            MotilityEntry(
                object_id=traj.object_id,
                class_id=traj.class_id,
                n_samples=len(traj.samples),
                vsl=vsl,
                vcl=vcl,
                vap=vap,
                unit=unit,
                motile=thresholds.is_motile(vsl, vcl, vap),
            )
        )
    ratio = None
    if entries:
        ratio = sum(e.motile for e in entries) / len(entries)
    return MotilityReport(
        entries=entries,
        excluded=excluded,
        progressive_ratio=ratio,
        thresholds=thresholds,
        unit="um/s" if um_per_px else "px/s",
    )


def progressive_motility(entries: list[MotilityEntry]) -> float:
    """Fraction of motile tracks; undefined (error) on an empty set."""
    if not entries:
        raise ValueError("progressive motility is undefined for an empty report")
    return sum(e.motile for e in entries) / len(entries)


# --- reference-track comparison -------------------------------------------


def load_reference_tracks(path: str | Path) -> dict:
    """Ground-truth track JSON: fps, um_per_px, vap_window, tracks[]."""
    data = json.loads(Path(path).read_text())
    for key in ("fps", "tracks"):
        if key not in data:
            raise ValueError(f"reference track file missing {key!r}")
    return data


def _mean_common_distance(traj: Trajectory, ref_samples: list) -> float | None:
    ref_by_frame = {int(f): (x, y) for f, x, y in ref_samples}
    common = [
        (x, y, *ref_by_frame[f]) for f, x, y in traj.samples if f in ref_by_frame
    ]
    if not common:
        return None
    return sum(math.hypot(x - rx, y - ry) for x, y, rx, ry in common) / len(common)


def pair_with_reference(
    trajectories: list[Trajectory],
    reference: dict,
    max_mean_dist: float = 10.0,
) -> list[tuple[Trajectory, dict]]:
    """Greedy trajectory-to-reference pairing by mean distance over common frames."""
    candidates = []
    for ti, traj in enumerate(trajectories):
        for ri, ref in enumerate(reference["tracks"]):
            d = _mean_common_distance(traj, ref["samples"])
            if d is not None and d <= max_mean_dist:
                candidates.append((d, ti, ri))
    candidates.sort()
    used_t: set[int] = set()
    used_r: set[int] = set()
    pairs = []
    for _, ti, ri in candidates:
        if ti in used_t or ri in used_r:
            continue
        used_t.add(ti)
        used_r.add(ri)
        pairs.append((trajectories[ti], reference["tracks"][ri]))
    return pairs


def error_rates(
    trajectories: list[Trajectory],
    reference: dict,
    um_per_px: float | None = None,
    smooth_window: int | None = None,
    max_mean_dist: float = 10.0,
) -> dict:
    """Mean relative VSL/VCL/VAP error of recovered tracks vs reference tracks.

    Also counts identity swaps: paired trajectories whose mean common-frame
    distance stays small but whose sample-to-reference assignment changes
    partway are already split by the tracker, so swaps show up as extra
    unmatched fragments; both counts are reported rather than asserted.
    """
    fps = reference["fps"]
    window = smooth_window or int(reference.get("vap_window", DEFAULT_SMOOTH_WINDOW))
    pairs = pair_with_reference(trajectories, reference, max_mean_dist)
    errs = {"vsl": [], "vcl": [], "vap": []}
    for traj, ref in pairs:
        if len(traj.samples) < 2:
            continue
        vsl, vcl, vap, _ = motility(traj, fps, um_per_px, window)
        for key, measured, truth in (
            ("vsl", vsl, ref["vsl"]),
            ("vcl", vcl, ref["vcl"]),
            ("vap", vap, ref["vap"]),
        ):
            scale_truth = truth * (um_per_px if um_per_px else 1.0)
            denom = max(abs(scale_truth), 1e-9)
            errs[key].append(abs(measured - scale_truth) / denom)
    n_pairs = len(pairs)
    return {
        "matched": n_pairs,
        "unmatched_measured": len(trajectories) - n_pairs,
        "unmatched_reference": len(reference["tracks"]) - n_pairs,
        "vsl_error": sum(errs["vsl"]) / len(errs["vsl"]) if errs["vsl"] else None,
        "vcl_error": sum(errs["vcl"]) / len(errs["vcl"]) if errs["vcl"] else None,
        "vap_error": sum(errs["vap"]) / len(errs["vap"]) if errs["vap"] else None,
    }


def trajectories_to_json(trajectories: list[Trajectory]) -> dict:
    return {
        "tracks": [
            {
                "object_id": t.object_id,
                "class_id": t.class_id,
                "gaps": t.gaps,
                "samples": [[f, x, y] for f, x, y in t.samples],
            }
            for t in trajectories
        ]
    }


def write_motility_csv(path: str | Path, report: MotilityReport) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["object_id", "class_id", "frames", "vsl", "vcl", "vap", "unit", "motile"])
        for e in report.entries:
            writer.writerow(
                [e.object_id, e.class_id, e.n_samples,
                 f"{e.vsl:.6f}", f"{e.vcl:.6f}", f"{e.vap:.6f}", e.unit, int(e.motile)]
            )
