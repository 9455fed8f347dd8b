"""Media ingestion: frame extraction, blur filtering, annotations, anchors, splits."""

from .anchors import AnchorSet, cluster_anchors
from .frames import Frame, FilterOutcome, extract_frames, filter_blurred, otsu_threshold
from .split import DatasetSplit, split_dataset
from .voc import load_voc_annotations, write_voc_annotations

__all__ = [
    "AnchorSet",
    "cluster_anchors",
    "Frame",
    "FilterOutcome",
    "extract_frames",
    "filter_blurred",
    "otsu_threshold",
    "DatasetSplit",
    "split_dataset",
    "load_voc_annotations",
    "write_voc_annotations",
]
