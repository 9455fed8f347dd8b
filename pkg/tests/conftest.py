"""Shared fixtures: a small written scene corpus and a quickly-trained checkpoint."""

import logging
from contextlib import contextmanager

import pytest

from microdet.ingest.anchors import cluster_anchors
from microdet.model import ModelConfig, TrainSchedule, build_model, save_checkpoint, train
from microdet.model.data import samples_from_frames
from microdet.synth import SceneConfig, generate_scene, write_scene


@contextmanager
def quiet_logs():
    """Silence expected target-collision warnings inside heavy fixtures."""
    logger = logging.getLogger("microdet")
    level = logger.level
    logger.setLevel(logging.ERROR)
    try:
        yield
    finally:
        logger.setLevel(level)

TINY_MODEL = ModelConfig(input_size=96, channel_plan=(4, 8, 12, 16), res_block_counts=(1, 1, 1))


def _scene_cfg(seed, duration=0.3):
    return SceneConfig(width=96, height=96, duration_s=duration,
                       n_sperm=3, n_impurity=1, seed=seed)


@pytest.fixture(scope="session")
def scene_corpus(tmp_path_factory):
    """Six tiny scenes written to disk in the standard layout."""
    root = tmp_path_factory.mktemp("scenes")
    dirs = []
    for seed in range(400, 406):
        cfg = _scene_cfg(seed, duration=0.15)
        frames, anns, tracks = generate_scene(cfg)
        scene_dir = root / cfg.name
        write_scene(scene_dir, cfg, frames, anns, tracks)
        dirs.append(scene_dir)
    return root, dirs


@pytest.fixture(scope="session")
def merged_corpus(scene_corpus, tmp_path_factory):
    """All scene frames/voc files merged into flat directories."""
    import shutil

    root, dirs = scene_corpus
    merged = tmp_path_factory.mktemp("merged")
    (merged / "frames").mkdir()
    (merged / "voc").mkdir()
    for d in dirs:
        for f in (d / "frames").glob("*.png"):
            shutil.copy(f, merged / "frames" / f.name)
        for f in (d / "voc").glob("*.xml"):
            shutil.copy(f, merged / "voc" / f.name)
    return merged


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    """A briefly-trained small model checkpoint (wiring tests, not accuracy)."""
    cfg = _scene_cfg(500)
    frames, anns, _ = generate_scene(cfg)
    samples = samples_from_frames(frames, anns)
    anchors = cluster_anchors([(a.box.width, a.box.height) for a in anns], k=6, seed=0)
    model = build_model(TINY_MODEL, seed=0)
    schedule = TrainSchedule(phase1_epochs=1, phase1_batch=4, phase1_lr=1e-3,
                             phase2_epochs=2, phase2_batch=4, phase2_lr=1e-3, patience=10)
    with quiet_logs():
        train(model, samples, samples, anchors, schedule, seed=0)
    path = tmp_path_factory.mktemp("ckpt") / "tiny.pt"
    save_checkpoint(path, model, anchors, meta={"purpose": "test"})
    return path
