"""Tiny-object detection, tracking and motility analysis for microscopy video."""

__version__ = "0.1.0"
