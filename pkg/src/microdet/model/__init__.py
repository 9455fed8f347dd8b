"""Detector network, target encoding, losses, training, inference."""

from .checkpoint import load_checkpoint, save_checkpoint
from .data import DetectionSample, load_samples_from_dirs, samples_from_frames
from .encode import GridGeometry, TargetTensor, encode_targets, decode_targets
from .inference import Detector
from .losses import LossWeights, ciou_loss, total_loss
from .net import ConfigError, DetectorNet, ModelConfig, build_model
from .train import TrainResult, TrainSchedule, TrainingDiverged, train

__all__ = [
    "load_checkpoint", "save_checkpoint",
    "DetectionSample", "load_samples_from_dirs", "samples_from_frames",
    "GridGeometry", "TargetTensor", "encode_targets", "decode_targets",
    "Detector",
    "LossWeights", "ciou_loss", "total_loss",
    "ConfigError", "DetectorNet", "ModelConfig", "build_model",
    "TrainResult", "TrainSchedule", "TrainingDiverged", "train",
]
