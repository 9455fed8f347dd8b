"""End-to-end CLI tests over the documented subcommands."""

import json
import math

import pytest

from microdet.cli import main
from microdet.postprocess import read_detections_jsonl, write_detections_jsonl


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def runs_dir(tmp_path):
    return tmp_path / "runs"


class TestSynthCommand:
    def test_writes_scene_artifacts(self, tmp_path, runs_dir):
        out = tmp_path / "scenes"
        code = run_cli("synth", "--runs-dir", runs_dir, "--seeds", "410,411",
                       "--width", 96, "--height", 96, "--duration", 0.2,
                       "--n-sperm", 2, "--n-impurity", 1, "--out", out)
        assert code == 0
        scene_dirs = sorted(out.iterdir())
        assert len(scene_dirs) == 2
        for d in scene_dirs:
            assert (d / "tracks.json").exists()
            assert list((d / "frames").glob("*.png"))
            assert list((d / "voc").glob("*.xml"))

    def test_degraded_frames_filtered_downstream(self, tmp_path, runs_dir):
        out = tmp_path / "scenes"
        code = run_cli("synth", "--runs-dir", runs_dir, "--seeds", "412",
                       "--width", 96, "--height", 96, "--duration", 0.2,
                       "--blur-frames", "0,1", "--out", out)
        assert code == 0
        from microdet.ingest import extract_frames, filter_blurred

        scene = next(out.iterdir())
        frames = [extract_frames(p)[0] for p in sorted((scene / "frames").glob("*.png"))]
        outcome = filter_blurred(frames, otsu_cutoff=10)
        assert outcome.removed >= 2


class TestPreprocessCommand:
    def test_filters_and_manifests(self, tmp_path, runs_dir):
        import cv2
        import numpy as np

        video = tmp_path / "clip.avi"
        writer = cv2.VideoWriter(str(video), cv2.VideoWriter_fourcc(*"MJPG"), 25, (64, 64))
        rng = np.random.default_rng(0)
        for i in range(8):
            if i % 2 == 0:
                frame = np.full((64, 64, 3), 40, np.uint8)  # constant -> blurred-like
            else:
                frame = rng.integers(0, 255, (64, 64, 3)).astype(np.uint8)
            writer.write(frame)
        writer.release()
        out = tmp_path / "pre"
        assert run_cli("preprocess", "--runs-dir", runs_dir, "--media", video,
                       "--out", out, "--blur-cutoff", 10) == 0
        manifest = json.loads((out / "clip" / "frame_manifest.json").read_text())
        assert len(manifest) == 8
        kept = [row for row in manifest if row["kept"]]
        assert len(kept) == 4
        assert all(row["otsu_value"] >= 10 for row in kept)

    def test_missing_media_fails_machine_parsable(self, tmp_path, runs_dir, capsys):
        code = run_cli("preprocess", "--runs-dir", runs_dir, "--media", tmp_path / "nope.avi")
        assert code == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert "error" in err and err["type"] == "MediaDecodeError"


class TestAnchorsSplitCommands:
    def test_anchors_from_corpus(self, merged_corpus, runs_dir, tmp_path):
        out = tmp_path / "anchors.json"
        assert run_cli("anchors", "--runs-dir", runs_dir,
                       "--voc-dir", merged_corpus / "voc", "--k", 6,
                       "--seed", 0, "--out", out) == 0
        anchors = json.loads(out.read_text())
        assert len(anchors) == 6
        areas = [w * h for w, h in anchors]
        assert areas == sorted(areas)

    def test_split_from_frames_dir(self, merged_corpus, runs_dir, tmp_path):
        out = tmp_path / "split.json"
        assert run_cli("split", "--runs-dir", runs_dir,
                       "--frames-dir", merged_corpus / "frames",
                       "--ratio", "6,2,2", "--seed", 3, "--out", out) == 0
        split = json.loads(out.read_text())
        assert len(split["train"]) + len(split["val"]) + len(split["test"]) == 6


@pytest.fixture(scope="session")
def pipeline_artifacts(merged_corpus, tiny_checkpoint, tmp_path_factory):
    """detect over the corpus with the tiny model; shared by eval/track tests."""
    runs_dir = tmp_path_factory.mktemp("runs")
    dets_path = tmp_path_factory.mktemp("dets") / "detections.jsonl"
    code = run_cli("detect", "--runs-dir", runs_dir, "--model", tiny_checkpoint,
                   "--media", merged_corpus / "frames", "--conf", 0.05,
                   "--out", dets_path)
    assert code == 0
    return runs_dir, dets_path


class TestDetectCommand:
    def test_jsonl_schema_and_fps_metric(self, pipeline_artifacts):
        runs_dir, dets_path = pipeline_artifacts
        for line in dets_path.read_text().splitlines():
            row = json.loads(line)
            assert set(row) == {"source_id", "frame", "class", "conf",
                                "x_min", "y_min", "x_max", "y_max"}
            assert 0.0 <= row["conf"] <= 1.0
        from microdet.runs import list_runs

        manifests = [m for m in list_runs(runs_dir) if m["command"] == "detect"]
        assert manifests and manifests[0]["metrics"]["end_to_end_fps"] > 0

    def test_env_var_model_default(self, merged_corpus, tiny_checkpoint, tmp_path, monkeypatch):
        monkeypatch.setenv("MICRODET_MODEL", str(tiny_checkpoint))
        out = tmp_path / "d.jsonl"
        assert run_cli("detect", "--runs-dir", tmp_path / "runs",
                       "--media", merged_corpus / "frames", "--out", out) == 0

    def test_unknown_flag_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("detect", "--no-such-flag", "x")
        assert exc.value.code == 2


class TestEvalCommand:
    def test_perfect_detections_score_one(self, merged_corpus, tmp_path, runs_dir):
        from microdet.boxes import Detection
        from microdet.cli import _load_gt_dir

        gts = _load_gt_dir(merged_corpus / "voc")
        dets = [
            Detection(g.box, g.class_id, 0.9, g.source_id, g.frame_index, provenance=i)
            for i, g in enumerate(gts)
        ]
        dets_path = tmp_path / "perfect.jsonl"
        write_detections_jsonl(dets_path, dets)
        report_path = tmp_path / "report.json"
        assert run_cli("eval", "--runs-dir", runs_dir, "--dets", dets_path,
                       "--voc-dir", merged_corpus / "voc",
                       "--b1", 0.5, "--b2", 0.45, "--r", 3,
                       "--out", report_path) == 0
        rep = json.loads(report_path.read_text())
        assert rep["mean_ap"] == 1.0
        assert rep["precision"] == 1.0 and rep["recall"] == 1.0 and rep["f1"] == 1.0

    def test_real_detections_report_in_range(self, merged_corpus, pipeline_artifacts, tmp_path):
        _, dets_path = pipeline_artifacts
        report_path = tmp_path / "report.json"
        assert run_cli("eval", "--runs-dir", tmp_path / "runs", "--dets", dets_path,
                       "--voc-dir", merged_corpus / "voc", "--out", report_path,
                       "--pr-csv", tmp_path / "pr.csv") == 0
        rep = json.loads(report_path.read_text())
        for key in ("mean_ap", "precision", "recall", "f1"):
            assert 0.0 <= rep[key] <= 1.0
        assert (tmp_path / "pr.csv").read_text().startswith("class,recall,precision")


class TestTrackCommand:
    def test_track_from_ground_truth_detections(self, scene_corpus, tmp_path, runs_dir):
        from microdet.boxes import Detection
        from microdet.cli import _load_gt_dir

        root, dirs = scene_corpus
        scene = dirs[0]
        gts = _load_gt_dir(scene / "voc")
        dets = [
            Detection(g.box, g.class_id, 0.95, g.source_id, g.frame_index, provenance=i)
            for i, g in enumerate(gts)
        ]
        dets_path = tmp_path / "dets.jsonl"
        write_detections_jsonl(dets_path, dets)
        assert run_cli("track", "--runs-dir", runs_dir, "--dets", dets_path,
                       "--fps", 25, "--gt-tracks", scene / "tracks.json") == 0
        from microdet.runs import list_runs

        manifest = [m for m in list_runs(runs_dir) if m["command"] == "track"][0]
        rates = json.load(open(manifest["artifacts"]["error_rates"]))
        assert rates["matched"] >= 1
        assert rates["vsl_error"] is not None and rates["vsl_error"] < 0.05
        motility = json.load(open(manifest["artifacts"]["motility"]))
        assert motility["entries"]
        csv_text = open(manifest["artifacts"]["motility_csv"]).read()
        assert csv_text.startswith("object_id,class_id,frames,vsl,vcl,vap,unit,motile")


class TestCrossvalCommand:
    def test_folds_and_aggregate(self, merged_corpus, tmp_path):
        runs_dir = tmp_path / "runs"
        anchors_path = tmp_path / "anchors.json"
        assert run_cli("anchors", "--runs-dir", runs_dir,
                       "--voc-dir", merged_corpus / "voc", "--k", 6,
                       "--out", anchors_path) == 0
        code = run_cli(
            "crossval", "--runs-dir", runs_dir,
            "--frames-dir", merged_corpus / "frames", "--voc-dir", merged_corpus / "voc",
            "--anchors", anchors_path, "--k", 3, "--seed", 0,
            "--input-size", 96, "--channels", "4,8,12,16", "--res-blocks", "1,1,1",
            "--p1-epochs", 0, "--p2-epochs", 1, "--p2-batch", 4, "--p2-lr", 1e-3,
        )
        assert code == 0
        from microdet.runs import list_runs

        manifest = [m for m in list_runs(runs_dir) if m["command"] == "crossval"][0]
        agg = json.load(open(manifest["artifacts"]["aggregate"]))
        assert len(agg["folds"]) == 3
        # re-aggregate by hand and compare
        for key in ("ap", "f1", "precision", "recall"):
            values = [fold[key] for fold in agg["folds"]]
            mean = sum(values) / len(values)
            var = sum((v - mean) ** 2 for v in values) / len(values)
            assert agg["aggregate"][key]["mean"] == pytest.approx(mean, abs=1e-9)
            assert agg["aggregate"][key]["stdev"] == pytest.approx(math.sqrt(var), abs=1e-9)

    def test_anchor_count_must_match_model(self, merged_corpus, tmp_path, capsys):
        anchors_path = tmp_path / "anchors4.json"
        run_cli("anchors", "--runs-dir", tmp_path / "r", "--voc-dir",
                merged_corpus / "voc", "--k", 4, "--out", anchors_path)
        capsys.readouterr()
        code = run_cli(
            "crossval", "--runs-dir", tmp_path / "r", "--frames-dir",
            merged_corpus / "frames", "--voc-dir", merged_corpus / "voc",
            "--anchors", anchors_path, "--k", 2,
            "--input-size", 96, "--channels", "4,8,12,16", "--res-blocks", "1,1,1",
            "--p1-epochs", 0, "--p2-epochs", 1,
        )
        assert code == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert "anchor" in err["error"].lower()


class TestRunsCommand:
    def test_list_and_show(self, merged_corpus, tmp_path, capsys):
        runs_dir = tmp_path / "runs"
        assert run_cli("anchors", "--runs-dir", runs_dir,
                       "--voc-dir", merged_corpus / "voc", "--k", 2) == 0
        assert run_cli("runs", "--runs-dir", runs_dir, "list") == 0
        out = capsys.readouterr().out
        import re

        run_id = next(
            l.split()[0] for l in out.splitlines()
            if re.match(r"^\d{8}-\d{6}-anchors-", l)
        )
        assert run_cli("runs", "--runs-dir", runs_dir, "show", run_id) == 0
        manifest = json.loads(capsys.readouterr().out)
        assert manifest["run_id"] == run_id
        assert manifest["environment"]["python"]

    def test_every_artifact_reachable(self, merged_corpus, tmp_path):
        runs_dir = tmp_path / "runs"
        run_cli("anchors", "--runs-dir", runs_dir, "--voc-dir", merged_corpus / "voc", "--k", 2)
        run_cli("split", "--runs-dir", runs_dir, "--frames-dir", merged_corpus / "frames")
        from pathlib import Path

        from microdet.runs import list_runs

        manifests = list_runs(runs_dir)
        referenced = set()
        for m in manifests:
            for path in m["artifacts"].values():
                assert Path(path).exists(), f"artifact missing: {path}"
                referenced.add(Path(path).resolve())
        # no stray files in run dirs beyond manifests and referenced artifacts
        for run_dir in Path(runs_dir).iterdir():
            for item in run_dir.iterdir():
                if item.name == "manifest.json":
                    continue
                assert item.resolve() in referenced


class TestConfigFile:
    def test_ini_values_used_and_flags_override(self, merged_corpus, tiny_checkpoint, tmp_path):
        ini = tmp_path / "microdet.ini"
        ini.write_text("[postprocess]\nconf = 0.9\nnms_iou = 0.3\n")
        out_hi = tmp_path / "hi.jsonl"
        assert run_cli("detect", "--runs-dir", tmp_path / "r1", "--config", ini,
                       "--model", tiny_checkpoint, "--media", merged_corpus / "frames",
                       "--out", out_hi) == 0
        out_lo = tmp_path / "lo.jsonl"
        assert run_cli("detect", "--runs-dir", tmp_path / "r2", "--config", ini,
                       "--model", tiny_checkpoint, "--media", merged_corpus / "frames",
                       "--conf", 0.05, "--out", out_lo) == 0
        hi = read_detections_jsonl(out_hi)
        lo = read_detections_jsonl(out_lo)
        assert len(lo) >= len(hi)
        assert all(d.confidence >= 0.9 for d in hi)
