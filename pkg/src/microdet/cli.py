"""Command-line entry points.

Subcommands: synth, preprocess, anchors, split, train, detect, eval, track,
crossval, serve, runs. Every command materializes a run directory under
--runs-dir with a manifest referencing its artifacts. Defaults can come
from an INI config file (sections [model], [train], [postprocess],
[tracking]); explicit flags win. The MICRODET_MODEL environment variable
supplies the default checkpoint path.

Errors print one machine-parsable JSON line to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time
from pathlib import Path

from . import __version__

DEFAULT_RUNS_DIR = "runs"
MODEL_ENV_VAR = "MICRODET_MODEL"

CONFIG_SCHEMA = {
    ("model", "input_size"): int,
    ("model", "channels"): str,
    ("model", "res_blocks"): str,
    ("model", "spp"): str,
    ("train", "phase1_epochs"): int,
    ("train", "phase1_batch"): int,
    ("train", "phase1_lr"): float,
    ("train", "phase2_epochs"): int,
    ("train", "phase2_batch"): int,
    ("train", "phase2_lr"): float,
    ("train", "patience"): int,
    ("postprocess", "conf"): float,
    ("postprocess", "nms_iou"): float,
    ("tracking", "gate_px"): float,
    ("tracking", "max_gap"): int,
    ("tracking", "um_per_px"): float,
    ("tracking", "vap_min"): float,
    ("tracking", "smooth_window"): int,
}


def _args_config(args) -> dict:
    """argparse namespace as a JSON-safe dict for run manifests."""
    return {
        k: str(v) if isinstance(v, Path) else v
        for k, v in vars(args).items()
        if k != "func" and not callable(v)
    }


def load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise FileNotFoundError(f"config file not found: {path}")
    values = {}
    for (section, key), cast in CONFIG_SCHEMA.items():
        if parser.has_option(section, key):
            values[f"{section}.{key}"] = cast(parser.get(section, key))
    return values


def pick(args, file_config: dict, flag: str, config_key: str, default):
    value = getattr(args, flag, None)
    if value is not None:
        return value
    if config_key in file_config:
        return file_config[config_key]
    return default


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).split(","))


def _parse_media_frames(media: str, fps_override=None):
    """A video/image path or a directory of images -> ordered Frame list."""
    from .ingest.frames import extract_frames

    path = Path(media)
    if path.is_dir():
        frames = []
        for img in sorted(path.glob("*.png")) + sorted(path.glob("*.jpg")):
            frames.extend(extract_frames(img, fps_override))
        from .model.data import split_stem

        for i, f in enumerate(frames):
            source, index = split_stem(Path(f.source_id).stem)
            frames[i].source_id = source
            frames[i].index = index
        frames.sort(key=lambda f: (f.source_id, f.index))
        if not frames:
            raise FileNotFoundError(f"no images found in {media}")
        return frames
    return extract_frames(path, fps_override)


def _load_gt_dir(voc_dir: str):
    from .ingest.voc import load_voc_annotations
    from .model.data import split_stem

    gts = []
    for xml in sorted(Path(voc_dir).glob("*.xml")):
        source, index = split_stem(xml.stem)
        gts.extend(load_voc_annotations(xml, source_id=source, frame_index=index))
    return gts


# --- subcommands ------------------------------------------------------------


def cmd_synth(args, file_config):
    from .runs import Run
    from .synth import SceneConfig, generate_scene, render_degradations, write_scene

    seeds = _ints(args.seeds)
    run = Run(args.runs_dir, "synth", config=_args_config(args), seeds={"scene_seeds": list(seeds)})
    out_root = Path(args.out) if args.out else run.path / "scenes"
    blur = set(_ints(args.blur_frames)) if args.blur_frames else set()
    for seed in seeds:
        config = SceneConfig(
            width=args.width, height=args.height, fps=args.fps,
            duration_s=args.duration, n_sperm=args.n_sperm,
            n_impurity=args.n_impurity, noise_sigma=args.noise_sigma, seed=seed,
        )
        frames, annotations, tracks = generate_scene(config)
        if blur or args.fringe_amplitude:
            frames = render_degradations(frames, blur, args.fringe_amplitude)
        scene_dir = out_root / config.name
        index = write_scene(scene_dir, config, frames, annotations, tracks)
        run.record_artifact(f"scene_{config.name}", scene_dir)
        print(f"{config.name}: {index['n_frames']} frames -> {scene_dir}")
    run.finish()
    return 0


def cmd_preprocess(args, file_config):
    import cv2

    from .ingest.frames import extract_frames, filter_blurred, write_frame_manifest
    from .runs import Run

    run = Run(
        args.runs_dir, "preprocess", config=_args_config(args),
        inputs={Path(m).name: m for m in args.media},
    )
    out_root = Path(args.out) if args.out else run.path / "preprocessed"
    for media in args.media:
        frames = extract_frames(media, args.fps)
        outcome = filter_blurred(frames, int(args.blur_cutoff))
        source = frames[0].source_id
        frames_dir = out_root / source / "frames"
        frames_dir.mkdir(parents=True, exist_ok=True)
        paths = {}
        for f in outcome.kept:
            p = frames_dir / f"{source}_{f.index:04d}.png"
            cv2.imwrite(str(p), f.image)
            paths[f.index] = str(p)
        manifest_path = out_root / source / "frame_manifest.json"
        write_frame_manifest(manifest_path, frames, outcome, paths)
        run.record_artifact(f"frames_{source}", frames_dir)
        run.record_artifact(f"frame_manifest_{source}", manifest_path)
        print(f"{source}: kept {len(outcome.kept)}/{len(frames)} frames "
              f"(removed {outcome.removed} below cutoff {args.blur_cutoff})")
    run.finish()
    return 0


def cmd_anchors(args, file_config):
    from .ingest.anchors import cluster_anchors
    from .runs import Run

    gts = _load_gt_dir(args.voc_dir)
    if not gts:
        raise ValueError(f"no annotations found in {args.voc_dir}")
    boxes = [(g.box.width, g.box.height) for g in gts]
    anchors = cluster_anchors(boxes, k=args.k, seed=args.seed)
    run = Run(args.runs_dir, "anchors", config=_args_config(args),
              seeds={"kmeans": args.seed}, inputs={"voc_dir": args.voc_dir})
    out = Path(args.out) if args.out else run.artifact_path("anchors", "anchors.json")
    anchors.to_json(out)
    if args.out:
        run.record_artifact("anchors", out)
    run.finish(metrics={"n_boxes": len(boxes)})
    print(f"fitted {args.k} anchors from {len(boxes)} boxes -> {out}")
    print(json.dumps([[round(w, 2), round(h, 2)] for w, h in anchors.anchors]))
    return 0


def cmd_split(args, file_config):
    from .ingest.split import split_dataset
    from .model.data import split_stem
    from .runs import Run

    if args.sources:
        sources = args.sources.split(",")
    else:
        stems = {split_stem(p.stem)[0] for p in Path(args.frames_dir).glob("*.png")}
        sources = sorted(stems)
    split = split_dataset(sources, ratio=_ints(args.ratio), seed=args.seed)
    run = Run(args.runs_dir, "split", config=_args_config(args), seeds={"split": args.seed})
    out = Path(args.out) if args.out else run.artifact_path("split", "split.json")
    split.to_json(out)
    if args.out:
        run.record_artifact("split", out)
    run.finish()
    print(f"train={len(split.train)} val={len(split.val)} test={len(split.test)} -> {out}")
    return 0


def _build_model_config(args, file_config):
    from .model import ModelConfig

    return ModelConfig(
        input_size=pick(args, file_config, "input_size", "model.input_size", 416),
        channel_plan=_ints(pick(args, file_config, "channels", "model.channels", "32,64,128,256")),
        res_block_counts=_ints(pick(args, file_config, "res_blocks", "model.res_blocks", "1,2,2")),
        spp_pool_sizes=_ints(pick(args, file_config, "spp", "model.spp", "5,9,13")),
    )


def _check_anchor_count(anchors, model_config):
    if len(anchors) != model_config.n_anchors:
        raise ValueError(
            f"anchor file has {len(anchors)} anchors but the model expects "
            f"{model_config.n_anchors}"
        )


def _build_schedule(args, file_config):
    from .model import TrainSchedule

    return TrainSchedule(
        phase1_epochs=pick(args, file_config, "p1_epochs", "train.phase1_epochs", 50),
        phase1_batch=pick(args, file_config, "p1_batch", "train.phase1_batch", 16),
        phase1_lr=pick(args, file_config, "p1_lr", "train.phase1_lr", 1e-3),
        phase2_epochs=pick(args, file_config, "p2_epochs", "train.phase2_epochs", 100),
        phase2_batch=pick(args, file_config, "p2_batch", "train.phase2_batch", 4),
        phase2_lr=pick(args, file_config, "p2_lr", "train.phase2_lr", 1e-4),
        patience=pick(args, file_config, "patience", "train.patience", 10),
    )


def _split_train_val(samples, val_fraction=0.2):
    """Hold out whole sources, never frames."""
    sources = sorted({s.source_id for s in samples})
    if len(sources) < 2:
        raise ValueError("need at least 2 sources to form a validation split")
    n_val = max(1, round(len(sources) * val_fraction))
    val_sources = set(sources[-n_val:])
    train = [s for s in samples if s.source_id not in val_sources]
    val = [s for s in samples if s.source_id in val_sources]
    return train, val


def cmd_train(args, file_config):
    from .ingest.anchors import AnchorSet
    from .model import build_model, save_checkpoint, train
    from .model.data import load_samples_from_dirs
    from .runs import Run

    model_config = _build_model_config(args, file_config)
    schedule = _build_schedule(args, file_config)
    samples = load_samples_from_dirs(args.frames_dir, args.voc_dir)
    if args.val_frames_dir:
        train_samples = samples
        val_samples = load_samples_from_dirs(args.val_frames_dir, args.val_voc_dir or args.voc_dir)
    else:
        train_samples, val_samples = _split_train_val(samples)
    anchors = AnchorSet.from_json(args.anchors)
    _check_anchor_count(anchors, model_config)

    run = Run(
        args.runs_dir, "train",
        config={"model": model_config.__dict__, "schedule": schedule.__dict__},
        seeds={"train": args.seed},
        inputs={"frames_dir": args.frames_dir, "voc_dir": args.voc_dir, "anchors": args.anchors},
    )
    model = build_model(model_config, seed=args.seed)
    started = time.perf_counter()
    result = train(
        model, train_samples, val_samples, anchors, schedule,
        seed=args.seed, dump_dir=run.path,
    )
    elapsed = time.perf_counter() - started

    ckpt = Path(args.out) if args.out else run.artifact_path("checkpoint", "checkpoint.pt")
    save_checkpoint(ckpt, model, anchors, meta={"run_id": run.run_id, "seed": args.seed})
    if args.out:
        run.record_artifact("checkpoint", ckpt)
    history = run.artifact_path("history", "history.csv")
    result.write_csv(history)
    run.finish(metrics={
        "best_val_loss": result.best_val_loss,
        "best_epoch": result.best_epoch,
        "epochs_run": result.epochs_run,
        "train_seconds": elapsed,
        "n_train": len(train_samples),
        "n_val": len(val_samples),
        "loss_repeatability_tol": result.loss_repeatability_tol,
    })
    print(f"trained {result.epochs_run} epochs in {elapsed:.0f}s; "
          f"best val loss {result.best_val_loss:.4f} (epoch {result.best_epoch})")
    print(f"checkpoint: {ckpt}")
    return 0


def _resolve_model(args):
    model = getattr(args, "model", None) or os.environ.get(MODEL_ENV_VAR)
    if not model:
        raise ValueError(f"no model given: pass --model or set {MODEL_ENV_VAR}")
    return model


def cmd_detect(args, file_config):
    import cv2

    from .model.inference import Detector
    from .postprocess import write_detections_jsonl
    from .runs import Run
    from .viz import render_overlay

    model_path = _resolve_model(args)
    conf = pick(args, file_config, "conf", "postprocess.conf", 0.5)
    nms_iou = pick(args, file_config, "nms_iou", "postprocess.nms_iou", 0.45)
    detector = Detector.from_checkpoint(model_path)
    frames = _parse_media_frames(args.media, args.fps)

    run = Run(args.runs_dir, "detect",
              config={"conf": conf, "nms_iou": nms_iou, "model": str(model_path)},
              inputs={"media": args.media, "model": model_path})
    started = time.perf_counter()
    per_frame = detector.detect_frames(frames, conf, nms_iou, batch_size=args.batch)
    elapsed = time.perf_counter() - started
    fps_measured = len(frames) / elapsed if elapsed > 0 else 0.0

    dets = [d for frame_dets in per_frame for d in frame_dets]
    out = Path(args.out) if args.out else run.artifact_path("detections", "detections.jsonl")
    write_detections_jsonl(out, dets)
    if args.out:
        run.record_artifact("detections", out)

    if args.overlay_dir:
        overlay_dir = Path(args.overlay_dir)
        overlay_dir.mkdir(parents=True, exist_ok=True)
        for f, frame_dets in zip(frames, per_frame):
            canvas = render_overlay(f.image, frame_dets)
            cv2.imwrite(str(overlay_dir / f"{f.source_id}_{f.index:04d}.png"), canvas)
        run.record_artifact("overlays", overlay_dir)

    run.finish(metrics={
        "n_frames": len(frames),
        "n_detections": len(dets),
        "input_size": detector.config.input_size,
        "end_to_end_fps": fps_measured,
    })
    print(f"{len(dets)} detections over {len(frames)} frames "
          f"({fps_measured:.2f} FPS end-to-end) -> {out}")
    return 0


def cmd_eval(args, file_config):
    from .metrics import MatchCriterion, pr_curve_and_ap, report
    from .postprocess import read_detections_jsonl
    from .runs import Run

    dets = read_detections_jsonl(args.dets)
    gts = _load_gt_dir(args.voc_dir)
    criterion = MatchCriterion(b1=args.b1, b2=args.b2, r=args.r)
    rep = report(dets, gts, criterion)

    run = Run(args.runs_dir, "eval",
              config={"b1": args.b1, "b2": args.b2, "r": args.r},
              inputs={"dets": args.dets, "voc_dir": args.voc_dir})
    out = Path(args.out) if args.out else run.artifact_path("report", "report.json")
    Path(out).write_text(json.dumps(rep.to_dict(), indent=2))
    if args.out:
        run.record_artifact("report", out)

    pr_path = Path(args.pr_csv) if args.pr_csv else run.artifact_path("pr_curve", "pr_curve.csv")
    with open(pr_path, "w") as fh:
        fh.write("class,recall,precision\n")
        for cid in sorted({g.class_id for g in gts}):
            cls_dets = [d for d in dets if d.class_id == cid]
            cls_gts = [g for g in gts if g.class_id == cid]
            _, curve = pr_curve_and_ap(cls_dets, cls_gts, criterion)
            for rec, pre in curve:
                fh.write(f"{cid},{rec:.6f},{pre:.6f}\n")
    if args.pr_csv:
        run.record_artifact("pr_curve", pr_path)
    run.finish(metrics=rep.to_dict())
    print(json.dumps(rep.to_dict(), indent=2))
    return 0


def cmd_track(args, file_config):
    from .postprocess import read_detections_jsonl
    from .runs import Run
    from .tracking import (
        MotilityThresholds,
        associate,
        build_motility_report,
        error_rates,
        group_by_frame,
        load_reference_tracks,
        trajectories_to_json,
        write_motility_csv,
    )

    gate = pick(args, file_config, "gate", "tracking.gate_px", 20.0)
    max_gap = pick(args, file_config, "max_gap", "tracking.max_gap", 2)
    um_per_px = pick(args, file_config, "um_per_px", "tracking.um_per_px", None)
    vap_min = pick(args, file_config, "vap_min", "tracking.vap_min", 25.0)
    window = pick(args, file_config, "smooth_window", "tracking.smooth_window", 5)

    dets = read_detections_jsonl(args.dets)
    trajectories = associate(group_by_frame(dets), gate_px=gate, max_gap=max_gap)
    thresholds = MotilityThresholds(vap_min=vap_min)
    mot = build_motility_report(trajectories, args.fps, um_per_px, window, thresholds)

    run = Run(args.runs_dir, "track",
              config={"gate": gate, "max_gap": max_gap, "fps": args.fps,
                      "um_per_px": um_per_px, "vap_min": vap_min, "smooth_window": window},
              inputs={"dets": args.dets})
    traj_path = run.artifact_path("trajectories", "trajectories.json")
    traj_path.write_text(json.dumps(trajectories_to_json(trajectories), indent=2))
    csv_path = run.artifact_path("motility_csv", "motility.csv")
    write_motility_csv(csv_path, mot)
    mot_path = run.artifact_path("motility", "motility.json")
    mot_path.write_text(json.dumps(mot.to_dict(), indent=2))

    metrics = {
        "n_trajectories": len(trajectories),
        "progressive_ratio": mot.progressive_ratio,
    }
    if args.gt_tracks:
        reference = load_reference_tracks(args.gt_tracks)
        rates = error_rates(trajectories, reference, um_per_px, window)
        rates_path = run.artifact_path("error_rates", "error_rates.json")
        rates_path.write_text(json.dumps(rates, indent=2))
        metrics["error_rates"] = rates
        print(json.dumps(rates, indent=2))
    run.finish(metrics=metrics)
    print(f"{len(trajectories)} trajectories; PR={mot.progressive_ratio} -> {run.path}")
    return 0


def cmd_crossval(args, file_config):
    from .ingest.anchors import AnchorSet
    from .metrics import MatchCriterion, crossval_aggregate, report
    from .model import build_model, train
    from .model.data import load_samples_from_dirs
    from .model.inference import Detector
    from .runs import Run

    import numpy as np

    samples = load_samples_from_dirs(args.frames_dir, args.voc_dir)
    sources = sorted({s.source_id for s in samples})
    if len(sources) < args.k:
        raise ValueError(f"{len(sources)} sources cannot form {args.k} folds")
    rng = np.random.default_rng(args.seed)
    order = rng.permutation(len(sources))
    folds: list[set] = [set() for _ in range(args.k)]
    for i, src_idx in enumerate(order):
        folds[i % args.k].add(sources[src_idx])

    model_config = _build_model_config(args, file_config)
    schedule = _build_schedule(args, file_config)
    anchors = AnchorSet.from_json(args.anchors)
    _check_anchor_count(anchors, model_config)
    criterion = MatchCriterion()

    run = Run(args.runs_dir, "crossval",
              config={"k": args.k, "model": model_config.__dict__, "schedule": schedule.__dict__},
              seeds={"fold_assignment": args.seed, "train": args.seed},
              inputs={"frames_dir": args.frames_dir, "voc_dir": args.voc_dir})
    fold_metrics = []
    for fold_idx, held in enumerate(folds):
        train_s = [s for s in samples if s.source_id not in held]
        held_s = [s for s in samples if s.source_id in held]
        model = build_model(model_config, seed=args.seed + fold_idx)
        train(model, train_s, held_s, anchors, schedule, seed=args.seed + fold_idx)
        detector = Detector(model, anchors)
        from .ingest.frames import Frame

        frames = [Frame(s.frame_index, s.image, s.source_id, 0.0) for s in held_s]
        per_frame = detector.detect_frames(frames, conf_threshold=0.05)
        dets = [d for fr in per_frame for d in fr]
        gts = [a for s in held_s for a in s.annotations]
        rep = report(dets, gts, criterion)
        row = {"ap": rep.mean_ap, "f1": rep.f1, "precision": rep.precision, "recall": rep.recall}
        fold_metrics.append(row)
        path = run.artifact_path(f"fold_{fold_idx}", f"fold_{fold_idx}_report.json")
        path.write_text(json.dumps(rep.to_dict(), indent=2))
        print(f"fold {fold_idx}: {json.dumps(row)}")

    aggregate = crossval_aggregate(fold_metrics)
    agg_path = run.artifact_path("aggregate", "aggregate.json")
    agg_path.write_text(json.dumps({"folds": fold_metrics, "aggregate": aggregate}, indent=2))
    run.finish(metrics={"aggregate": aggregate})
    print(json.dumps(aggregate, indent=2))
    return 0


def cmd_serve(args, file_config):
    import uvicorn

    from .service import create_app

    app = create_app(
        model_path=_resolve_model(args),
        runs_root=args.runs_dir,
        ui_dir=args.ui_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_runs(args, file_config):
    from .runs import list_runs, load_run

    if args.action == "list":
        for manifest in list_runs(args.runs_dir):
            print(f"{manifest['run_id']}  {manifest['command']:10s}  "
                  f"{len(manifest.get('artifacts', {}))} artifacts")
        return 0
    print(json.dumps(load_run(args.runs_dir, args.run_id), indent=2))
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microdet",
        description="Tiny-object detection, tracking and motility analysis for microscopy video",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--runs-dir", default=DEFAULT_RUNS_DIR, help="run persistence root")
        p.add_argument("--config", default=None, help="INI config file")

    p = sub.add_parser("synth", help="generate synthetic scenes with ground truth")
    common(p)
    p.add_argument("--seeds", required=True, help="comma-separated scene seeds")
    p.add_argument("--out", default=None)
    p.add_argument("--width", type=int, default=192)
    p.add_argument("--height", type=int, default=192)
    p.add_argument("--fps", type=float, default=25.0)
    p.add_argument("--duration", type=float, default=0.8)
    p.add_argument("--n-sperm", type=int, default=6)
    p.add_argument("--n-impurity", type=int, default=2)
    p.add_argument("--noise-sigma", type=float, default=2.0)
    p.add_argument("--blur-frames", default=None, help="frame indices to blur")
    p.add_argument("--fringe-amplitude", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="extract frames and drop blurred ones")
    common(p)
    p.add_argument("--media", nargs="+", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--blur-cutoff", type=int, default=10)
    p.add_argument("--fps", type=float, default=None)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("anchors", help="fit anchor priors by k-means over box shapes")
    common(p)
    p.add_argument("--voc-dir", required=True)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_anchors)

    p = sub.add_parser("split", help="partition sources into train/val/test")
    common(p)
    p.add_argument("--frames-dir", default=None)
    p.add_argument("--sources", default=None, help="comma-separated source ids")
    p.add_argument("--ratio", default="6,2,2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the detector")
    common(p)
    p.add_argument("--frames-dir", required=True)
    p.add_argument("--voc-dir", required=True)
    p.add_argument("--val-frames-dir", default=None)
    p.add_argument("--val-voc-dir", default=None)
    p.add_argument("--anchors", required=True)
    p.add_argument("--input-size", type=int, default=None)
    p.add_argument("--channels", default=None)
    p.add_argument("--res-blocks", default=None)
    p.add_argument("--spp", default=None)
    p.add_argument("--p1-epochs", type=int, default=None)
    p.add_argument("--p1-batch", type=int, default=None)
    p.add_argument("--p1-lr", type=float, default=None)
    p.add_argument("--p2-epochs", type=int, default=None)
    p.add_argument("--p2-batch", type=int, default=None)
    p.add_argument("--p2-lr", type=float, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="checkpoint path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="run a model over media")
    common(p)
    p.add_argument("--model", default=None)
    p.add_argument("--media", required=True)
    p.add_argument("--conf", type=float, default=None)
    p.add_argument("--nms-iou", type=float, default=None)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--fps", type=float, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--overlay-dir", default=None)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score detections against VOC ground truth")
    common(p)
    p.add_argument("--dets", required=True)
    p.add_argument("--voc-dir", required=True)
    p.add_argument("--b1", type=float, default=0.5)
    p.add_argument("--b2", type=float, default=0.45)
    p.add_argument("--r", type=float, default=3.0)
    p.add_argument("--out", default=None)
    p.add_argument("--pr-csv", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("track", help="associate detections and compute motility")
    common(p)
    p.add_argument("--dets", required=True)
    p.add_argument("--fps", type=float, required=True)
    p.add_argument("--gate", type=float, default=None)
    p.add_argument("--max-gap", type=int, default=None)
    p.add_argument("--um-per-px", type=float, default=None)
    p.add_argument("--vap-min", type=float, default=None)
    p.add_argument("--smooth-window", type=int, default=None)
    p.add_argument("--gt-tracks", default=None)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("crossval", help="k-fold cross-validation by source")
    common(p)
    p.add_argument("--frames-dir", required=True)
    p.add_argument("--voc-dir", required=True)
    p.add_argument("--anchors", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input-size", type=int, default=None)
    p.add_argument("--channels", default=None)
    p.add_argument("--res-blocks", default=None)
    p.add_argument("--spp", default=None)
    p.add_argument("--p1-epochs", type=int, default=None)
    p.add_argument("--p1-batch", type=int, default=None)
    p.add_argument("--p1-lr", type=float, default=None)
    p.add_argument("--p2-epochs", type=int, default=None)
    p.add_argument("--p2-batch", type=int, default=None)
    p.add_argument("--p2-lr", type=float, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("serve", help="run the HTTP service")
    common(p)
    p.add_argument("--model", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui-dir", default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("runs", help="inspect recorded runs")
    common(p)
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("run_id", nargs="?", default=None)
    p.set_defaults(func=cmd_runs)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_config = load_config_file(args.config)
        return args.func(args, file_config)
    except Exception as exc:  # machine-parsable failure contract
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
