"""Hot box kernels with backend selection at import.

The compiled Cython extension is preferred; the NumPy reference takes over
when the extension is missing or when ``MICRODET_NO_EXT`` is set (used by the
benchmark and the parity tests).
"""

import os

from . import numpy_ref

if os.environ.get("MICRODET_NO_EXT"):
    _impl = numpy_ref
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = numpy_ref

iou_matrix = _impl.iou_matrix
diou_nms = _impl.diou_nms
BACKEND = "cython" if _impl is not numpy_ref else "numpy"

__all__ = ["iou_matrix", "diou_nms", "BACKEND", "numpy_ref"]
