"""Local HTTP service exposing detection, tracking and run inspection.

The model loads once and is shared read-only; confidence and NMS thresholds
apply per request at the postprocess stage, so an operator console can
re-query on every slider move without touching the model. Raw grid outputs
are cached per media digest, which makes threshold-only changes cheap.
Responses carry no timestamps or random ids: identical (media digest, conf,
nms_iou, model) requests produce byte-identical bodies.
"""

from __future__ import annotations

import hashlib
import json
import shutil
import tempfile
import threading
from collections import OrderedDict
from pathlib import Path

import cv2
from fastapi import FastAPI, File, HTTPException, UploadFile
from fastapi.responses import FileResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import __version__
from .ingest.frames import Frame
from .metrics import MatchCriterion, match
from .model.inference import Detector
from .postprocess import DEFAULT_CONF_THRESHOLD, DEFAULT_NMS_THRESHOLD, decode, detection_to_row, diou_nms
from .runs import list_runs, load_run, sha256_file
from .tracking import (
    MotilityThresholds,
    associate,
    build_motility_report,
    group_by_frame,
    trajectories_to_json,
)
from .viz import render_overlay

GRID_CACHE_SIZE = 4


class DetectRequest(BaseModel):
    path: str | None = None
    media_id: str | None = None
    conf: float = DEFAULT_CONF_THRESHOLD
    nms_iou: float = DEFAULT_NMS_THRESHOLD
    gt_dir: str | None = None
    overlay: bool = False
    frame: int | None = None


class TrackRequest(BaseModel):
    path: str | None = None
    media_id: str | None = None
    conf: float = DEFAULT_CONF_THRESHOLD
    nms_iou: float = DEFAULT_NMS_THRESHOLD
    gate_px: float = 20.0
    max_gap: int = 2
    um_per_px: float | None = None
    vap_min: float = 25.0
    fps: float | None = None


class MediaStore:
    """Uploaded/ingested media cached by content digest, frames as PNG."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)

    def dir_for(self, media_id: str) -> Path:
        return self.root / media_id

    def ingest_path(self, path: str) -> str:
        from .cli import _parse_media_frames

        src = Path(path)
        if not src.exists():
            raise HTTPException(404, f"media path not found: {path}")
        if src.is_dir():
            digest = hashlib.sha256(
                "".join(sorted(p.name for p in src.glob("*.png"))).encode()
            ).hexdigest()[:24]
        else:
            digest = sha256_file(src)[:24]
        target = self.dir_for(digest)
        if not (target / "meta.json").exists():
            frames = _parse_media_frames(str(src))
            self._store(digest, frames)
        return digest

    def ingest_upload(self, filename: str, payload: bytes) -> str:
        digest = hashlib.sha256(payload).hexdigest()[:24]
        target = self.dir_for(digest)
        if not (target / "meta.json").exists():
            suffix = Path(filename or "upload.bin").suffix or ".bin"
            with tempfile.NamedTemporaryFile(suffix=suffix, delete=False) as tmp:
                tmp.write(payload)
                tmp_path = tmp.name
            try:
                from .ingest.frames import extract_frames

                frames = extract_frames(tmp_path)
            finally:
                Path(tmp_path).unlink(missing_ok=True)
            self._store(digest, frames)
        return digest

    def _store(self, media_id: str, frames: list[Frame]) -> None:
        """Frames are renumbered by ingest position: one media, one timeline."""
        target = self.dir_for(media_id)
        target.mkdir(parents=True, exist_ok=True)
        fps = 25.0
        if len(frames) > 1 and frames[1].timestamp_s > 0:
            fps = 1.0 / (frames[1].timestamp_s - frames[0].timestamp_s)
        for i, f in enumerate(frames):
            cv2.imwrite(str(target / f"frame_{i:05d}.png"), f.image)
        h, w = frames[0].image.shape[:2]
        (target / "meta.json").write_text(json.dumps({
            "media_id": media_id,
            "source_id": frames[0].source_id,
            "n_frames": len(frames),
            "width": w,
            "height": h,
            "fps": fps,
            # original (source, frame index) per stored position, for GT alignment
            "frames": [[f.source_id, f.index] for f in frames],
        }))

    def meta(self, media_id: str) -> dict:
        path = self.dir_for(media_id) / "meta.json"
        if not path.exists():
            raise HTTPException(404, f"unknown media id {media_id!r}")
        return json.loads(path.read_text())

    def frames(self, media_id: str) -> list[Frame]:
        meta = self.meta(media_id)
        target = self.dir_for(media_id)
        origins = meta.get("frames") or [[meta["source_id"], i] for i in range(meta["n_frames"])]
        out = []
        for i in range(meta["n_frames"]):
            image = cv2.imread(str(target / f"frame_{i:05d}.png"), cv2.IMREAD_COLOR)
            if image is None:
                raise HTTPException(500, f"stored frame {i} of {media_id} unreadable")
            out.append(Frame(i, image, origins[i][0], i / meta["fps"]))
        return out

    def frame_file(self, media_id: str, index: int) -> Path:
        path = self.dir_for(media_id) / f"frame_{index:05d}.png"
        if not path.exists():
            raise HTTPException(404, f"frame {index} of {media_id} not found")
        return path


def create_app(model_path: str, runs_root: str = "runs", ui_dir: str | None = None) -> FastAPI:
    detector = Detector.from_checkpoint(model_path)
    model_id = sha256_file(model_path)[:16]
    runs_root_path = Path(runs_root)
    store = MediaStore(runs_root_path / "service_media")
    overlays_root = runs_root_path / "service_overlays"
    overlays_root.mkdir(parents=True, exist_ok=True)

    inference_lock = threading.Lock()
    grid_cache: OrderedDict[str, list] = OrderedDict()

    app = FastAPI(title="microdet service", version=__version__)

    def grids_for(media_id: str):
        with inference_lock:
            if media_id in grid_cache:
                grid_cache.move_to_end(media_id)
                return grid_cache[media_id]
            frames = store.frames(media_id)
            grids = detector.predict_grids(frames)
            grid_cache[media_id] = grids
            while len(grid_cache) > GRID_CACHE_SIZE:
                grid_cache.popitem(last=False)
            return grids

    def resolve_media(path: str | None, media_id: str | None) -> str:
        if media_id:
            store.meta(media_id)
            return media_id
        if path:
            return store.ingest_path(path)
        raise HTTPException(400, "provide media_id or path")

    @app.get("/health")
    def health():
        return {"status": "ok", "model": model_id}

    @app.get("/models")
    def models():
        return [{
            "id": model_id,
            "path": str(model_path),
            "input_size": detector.config.input_size,
            "n_anchors": detector.config.n_anchors,
            "anchors": [[w, h] for w, h in detector.anchors.anchors],
        }]

    @app.get("/runs")
    def runs_index():
        return [{"run_id": m["run_id"], "command": m["command"]} for m in list_runs(runs_root_path)]

    @app.get("/runs/{run_id}")
    def runs_show(run_id: str):
        try:
            return load_run(runs_root_path, run_id)
        except FileNotFoundError as exc:
            raise HTTPException(404, str(exc)) from exc

    @app.get("/media/{media_id}")
    def media_meta(media_id: str):
        return store.meta(media_id)

    @app.get("/media/{media_id}/frames/{index}")
    def media_frame(media_id: str, index: int):
        return FileResponse(store.frame_file(media_id, index), media_type="image/png")

    @app.post("/media")
    async def media_upload(file: UploadFile = File(...)):
        payload = await file.read()
        try:
            media_id = store.ingest_upload(file.filename, payload)
        except Exception as exc:
            raise HTTPException(400, f"cannot decode media: {exc}") from exc
        return store.meta(media_id)

    def run_detect(req: DetectRequest) -> dict:
        media_id = resolve_media(req.path, req.media_id)
        if not 0.0 <= req.conf <= 1.0:
            raise HTTPException(400, f"conf outside [0, 1]: {req.conf}")
        if not 0.0 < req.nms_iou < 1.0:
            raise HTTPException(400, f"nms_iou outside (0, 1): {req.nms_iou}")
        meta = store.meta(media_id)
        grids = grids_for(media_id)
        per_frame = [
            diou_nms(decode(g, detector.anchors, req.conf), req.nms_iou) for g in grids
        ]
        dets = [d for frame in per_frame for d in frame]
        body = {
            "media_id": media_id,
            "model": model_id,
            "conf": req.conf,
            "nms_iou": req.nms_iou,
            "n_frames": meta["n_frames"],
            "width": meta["width"],
            "height": meta["height"],
            "fps": meta["fps"],
            "detections": [detection_to_row(d) for d in dets],
            "counts": {"detections": len(dets)},
        }

        if req.gt_dir:
            from .boxes import Annotation
            from .cli import _load_gt_dir

            # remap ground truth onto stored timeline positions
            origins = meta.get("frames") or []
            position = {(src, idx): pos for pos, (src, idx) in enumerate(origins)}
            aligned_gts = [
                Annotation(g.box, g.class_id, g.source_id, position[(g.source_id, g.frame_index)])
                for g in _load_gt_dir(req.gt_dir)
                if (g.source_id, g.frame_index) in position
            ]
            result = match(dets, aligned_gts, MatchCriterion())
            tp_by_det = {int(result.det_order[i]): bool(result.det_is_tp[i])
                         for i in range(len(dets))}
            labels = [tp_by_det[i] for i in range(len(dets))]
            fn_boxes = [
                {"frame": aligned_gts[gi].frame_index, "class": aligned_gts[gi].class_id,
                 "x_min": aligned_gts[gi].box.x_min, "y_min": aligned_gts[gi].box.y_min,
                 "x_max": aligned_gts[gi].box.x_max, "y_max": aligned_gts[gi].box.y_max}
                for gi in range(len(aligned_gts)) if not result.gt_matched[gi]
            ]
            body["match"] = {
                "tp_flags": labels,
                "fn_boxes": fn_boxes,
                "counts": {
                    "tp": result.tp, "fp": result.fp, "fn": result.fn,
                    "gt": len(aligned_gts),
                },
            }
            body["counts"].update(body["match"]["counts"])

        body["overlay"] = None
        if req.overlay:
            key = f"{media_id}-{model_id}-{req.conf:.6f}-{req.nms_iou:.6f}"
            overlay_dir = overlays_root / key
            overlay_dir.mkdir(parents=True, exist_ok=True)
            frames = store.frames(media_id)
            for f, frame_dets in zip(frames, per_frame):
                out = overlay_dir / f"frame_{f.index:05d}.png"
                if not out.exists():
                    cv2.imwrite(str(out), render_overlay(f.image, frame_dets))
            body["overlay"] = f"/overlays/{key}"
        return body

    @app.post("/detect")
    def detect(req: DetectRequest):
        body = run_detect(req)
        # canonical serialization keeps identical requests byte-identical
        return Response(json.dumps(body, sort_keys=True), media_type="application/json")

    @app.post("/detect/upload")
    async def detect_upload(
        file: UploadFile = File(...),
        conf: float = DEFAULT_CONF_THRESHOLD,
        nms_iou: float = DEFAULT_NMS_THRESHOLD,
    ):
        payload = await file.read()
        try:
            media_id = store.ingest_upload(file.filename, payload)
        except Exception as exc:
            raise HTTPException(400, f"cannot decode media: {exc}") from exc
        body = run_detect(DetectRequest(media_id=media_id, conf=conf, nms_iou=nms_iou))
        return Response(json.dumps(body, sort_keys=True), media_type="application/json")

    @app.get("/overlays/{key}/{name}")
    def overlay_file(key: str, name: str):
        path = overlays_root / key / name
        if not path.exists():
            raise HTTPException(404, "no such overlay")
        return FileResponse(path, media_type="image/png")

    @app.post("/track")
    def track(req: TrackRequest):
        media_id = resolve_media(req.path, req.media_id)
        meta = store.meta(media_id)
        fps = req.fps or meta["fps"]
        grids = grids_for(media_id)
        per_frame = [
            diou_nms(decode(g, detector.anchors, req.conf), req.nms_iou) for g in grids
        ]
        dets = [d for frame in per_frame for d in frame]
        trajectories = associate(group_by_frame(dets), gate_px=req.gate_px, max_gap=req.max_gap)
        report = build_motility_report(
            trajectories, fps, req.um_per_px,
            thresholds=MotilityThresholds(vap_min=req.vap_min),
        )
        body = {
            "media_id": media_id,
            "model": model_id,
            "conf": req.conf,
            "nms_iou": req.nms_iou,
            "fps": fps,
            "trajectories": trajectories_to_json(trajectories)["tracks"],
            "motility": report.to_dict(),
        }
        return Response(json.dumps(body, sort_keys=True), media_type="application/json")

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:
        @app.get("/ui")
        def ui_missing():
            return JSONResponse(
                {"error": "console bundle not built; run npm install && npm run build in frontend/"},
                status_code=404,
            )

    return app
