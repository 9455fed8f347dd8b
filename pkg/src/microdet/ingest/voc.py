"""LabelImg/Pascal-VOC XML reading and writing.

Boxes that overshoot the declared image size by a few pixels (common in
hand-labelled exports) are clamped to the image rather than rejected.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path

from ..boxes import CLASS_IDS, Annotation, Box


class VocParseError(RuntimeError):
    pass


def load_voc_annotations(
    xml_path: str | Path,
    class_map: dict[str, int] | None = None,
    source_id: str = "",
    frame_index: int = 0,
) -> list[Annotation]:
    """Parse one VOC file into annotations, clamping boxes to the declared size."""
    class_map = class_map if class_map is not None else dict(CLASS_IDS)
    path = Path(xml_path)
    try:
        root = ET.parse(str(path)).getroot()
    except ET.ParseError as exc:
        raise VocParseError(f"malformed VOC XML {path}: {exc}") from exc

    size = root.find("size")
    if size is None or size.find("width") is None or size.find("height") is None:
        raise VocParseError(f"{path}: missing <size> with width/height")
    width = float(size.findtext("width"))
    height = float(size.findtext("height"))

    annotations: list[Annotation] = []
    for i, obj in enumerate(root.iter("object")):
        name = (obj.findtext("name") or "").strip()
        if name not in class_map:
            raise VocParseError(f"{path}: object {i} has unknown class name {name!r}")
        bnd = obj.find("bndbox")
        if bnd is None:
            raise VocParseError(f"{path}: object {i} has no <bndbox>")
        x_min = float(bnd.findtext("xmin"))
        y_min = float(bnd.findtext("ymin"))
        x_max = float(bnd.findtext("xmax"))
        y_max = float(bnd.findtext("ymax"))
        if x_max <= x_min or y_max <= y_min:
            raise VocParseError(f"{path}: object {i} has inverted/degenerate box")
        box = Box(x_min, y_min, x_max, y_max).clamped(width, height)
        annotations.append(
            Annotation(box=box, class_id=class_map[name], source_id=source_id, frame_index=frame_index)
        )
    return annotations


def write_voc_annotations(
    xml_path: str | Path,
    annotations: list[Annotation],
    width: int,
    height: int,
    filename: str = "",
    class_names: dict[int, str] | None = None,
) -> None:
    class_names = class_names or {v: k for k, v in CLASS_IDS.items()}
    root = ET.Element("annotation")
    ET.SubElement(root, "filename").text = filename or Path(xml_path).stem
    size = ET.SubElement(root, "size")
    ET.SubElement(size, "width").text = str(width)
    ET.SubElement(size, "height").text = str(height)
    ET.SubElement(size, "depth").text = "3"
    for ann in annotations:
        obj = ET.SubElement(root, "object")
        ET.SubElement(obj, "name").text = class_names[ann.class_id]
        ET.SubElement(obj, "difficult").text = "0"
        bnd = ET.SubElement(obj, "bndbox")
        ET.SubElement(bnd, "xmin").text = f"{ann.box.x_min:.2f}"
        ET.SubElement(bnd, "ymin").text = f"{ann.box.y_min:.2f}"
        ET.SubElement(bnd, "xmax").text = f"{ann.box.x_max:.2f}"
        ET.SubElement(bnd, "ymax").text = f"{ann.box.y_max:.2f}"
    tree = ET.ElementTree(root)
    ET.indent(tree)
    tree.write(str(xml_path), encoding="unicode")
