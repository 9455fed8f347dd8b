"""Regenerate the console parity fixtures.

Trains a small throwaway model, runs the HTTP service in-process over one
synthetic scene, and captures (a) the /detect response with ground truth,
(b) the CLI eval report for the same detections and thresholds, (c) the
/track response, and (d) the CLI motility CSV for the same inputs. The
vitest suite asserts the console's display pipeline reproduces the CLI
numbers from these files.

Run from the repository root:  python frontend/tests/make_fixtures.py
"""

import json
import logging
import sys
import tempfile
from pathlib import Path

logging.disable(logging.WARNING)

FIXTURE_DIR = Path(__file__).parent / "fixtures"
CONF = 0.2
NMS = 0.45


def main() -> int:
    from fastapi.testclient import TestClient

    from microdet.cli import main as cli_main
    from microdet.ingest.anchors import cluster_anchors
    from microdet.model import ModelConfig, TrainSchedule, build_model, save_checkpoint, train
    from microdet.model.data import samples_from_frames
    from microdet.service import create_app
    from microdet.synth import SceneConfig, generate_scene, write_scene

    tmp = Path(tempfile.mkdtemp(prefix="microdet-fixtures-"))
    scene_cfg = SceneConfig(width=96, height=96, duration_s=0.4, n_sperm=3,
                            n_impurity=1, seed=777)
    frames, annotations, tracks = generate_scene(scene_cfg)
    scene_dir = tmp / "scene"
    write_scene(scene_dir, scene_cfg, frames, annotations, tracks)

    samples = samples_from_frames(frames, annotations)
    anchors = cluster_anchors(
        [(a.box.width, a.box.height) for a in annotations], k=6, seed=0
    )
    model = build_model(
        ModelConfig(input_size=96, channel_plan=(4, 8, 12, 16), res_block_counts=(1, 1, 1)),
        seed=0,
    )
    train(model, samples, samples, anchors,
          TrainSchedule(phase1_epochs=0, phase1_batch=4, phase1_lr=1e-3,
                        phase2_epochs=120, phase2_batch=4, phase2_lr=1e-3, patience=50),
          seed=0)
    ckpt = tmp / "model.pt"
    save_checkpoint(ckpt, model, anchors, meta={})

    app = create_app(str(ckpt), runs_root=str(tmp / "runs"))
    client = TestClient(app)

    detect = client.post("/detect", json={
        "path": str(scene_dir / "frames"), "conf": CONF, "nms_iou": NMS,
        "gt_dir": str(scene_dir / "voc"),
    })
    detect.raise_for_status()
    detect_body = detect.json()

    track = client.post("/track", json={
        "path": str(scene_dir / "frames"), "conf": CONF, "nms_iou": NMS, "fps": scene_cfg.fps,
    })
    track.raise_for_status()
    track_body = track.json()

    # CLI eval on the same detections at the same thresholds
    dets_path = tmp / "dets.jsonl"
    with open(dets_path, "w") as fh:
        for row in detect_body["detections"]:
            fh.write(json.dumps(row) + "\n")
    report_path = tmp / "report.json"
    rc = cli_main(["eval", "--runs-dir", str(tmp / "runs"), "--dets", str(dets_path),
                   "--voc-dir", str(scene_dir / "voc"), "--out", str(report_path)])
    assert rc == 0, "CLI eval failed"
    report = json.loads(report_path.read_text())

    # CLI track on the same detections
    rc = cli_main(["track", "--runs-dir", str(tmp / "runs"), "--dets", str(dets_path),
                   "--fps", str(scene_cfg.fps)])
    assert rc == 0, "CLI track failed"
    from microdet.runs import list_runs

    manifest = [m for m in list_runs(tmp / "runs") if m["command"] == "track"][-1]
    motility_csv = Path(manifest["artifacts"]["motility_csv"]).read_text()

    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    (FIXTURE_DIR / "detect_response.json").write_text(json.dumps(detect_body, indent=2))
    (FIXTURE_DIR / "track_response.json").write_text(json.dumps(track_body, indent=2))
    (FIXTURE_DIR / "cli_eval_report.json").write_text(json.dumps(report, indent=2))
    (FIXTURE_DIR / "cli_motility.csv").write_text(motility_csv)
    print(f"fixtures written to {FIXTURE_DIR}")
    print(f"  detections: {len(detect_body['detections'])}, "
          f"tp/fp/fn: {detect_body['match']['counts']}")
    print(f"  cli counts: tp={report['tp']} fp={report['fp']} fn={report['fn']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
