# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled box kernels: pairwise IoU and greedy DIoU suppression.

Semantics match ``numpy_ref`` exactly; see that module for the contract.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def iou_matrix(a, b):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] aa = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] bb = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = aa.shape[0]
    cdef Py_ssize_t m = bb.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n, m), dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double iw, ih, inter, area_a, area_b, union

    for i in range(n):
        area_a = (aa[i, 2] - aa[i, 0]) * (aa[i, 3] - aa[i, 1])
        for j in range(m):
            iw = min(aa[i, 2], bb[j, 2]) - max(aa[i, 0], bb[j, 0])
            if iw <= 0.0:
                continue
            ih = min(aa[i, 3], bb[j, 3]) - max(aa[i, 1], bb[j, 1])
            if ih <= 0.0:
                continue
            inter = iw * ih
            area_b = (bb[j, 2] - bb[j, 0]) * (bb[j, 3] - bb[j, 1])
            union = area_a + area_b - inter
            if union > 0.0:
                out[i, j] = inter / union
    return out


def diou_nms(boxes, class_ids, double threshold):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] bx = np.ascontiguousarray(boxes, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cls = np.ascontiguousarray(class_ids, dtype=np.int64)
    cdef Py_ssize_t n = bx.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] keep = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] suppressed = np.zeros(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cx = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cy = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] areas = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i, j, n_keep = 0
    cdef double iw, ih, inter, union, iou, ew, eh, c2, rho2, diou

    for i in range(n):
        cx[i] = (bx[i, 0] + bx[i, 2]) / 2.0
        cy[i] = (bx[i, 1] + bx[i, 3]) / 2.0
        areas[i] = (bx[i, 2] - bx[i, 0]) * (bx[i, 3] - bx[i, 1])

    for i in range(n):
        if suppressed[i]:
            continue
        keep[n_keep] = i
        n_keep += 1
        for j in range(i + 1, n):
            if suppressed[j] or cls[j] != cls[i]:
                continue
            iw = min(bx[i, 2], bx[j, 2]) - max(bx[i, 0], bx[j, 0])
            ih = min(bx[i, 3], bx[j, 3]) - max(bx[i, 1], bx[j, 1])
            if iw > 0.0 and ih > 0.0:
                inter = iw * ih
            else:
                inter = 0.0
            union = areas[i] + areas[j] - inter
            iou = inter / union if union > 0.0 else 0.0
            ew = max(bx[i, 2], bx[j, 2]) - min(bx[i, 0], bx[j, 0])
            eh = max(bx[i, 3], bx[j, 3]) - min(bx[i, 1], bx[j, 1])
            c2 = ew * ew + eh * eh
            rho2 = (cx[i] - cx[j]) ** 2 + (cy[i] - cy[j]) ** 2
            diou = iou - rho2 / c2 if c2 > 0.0 else iou
            if diou > threshold:
                suppressed[j] = 1
    return keep[:n_keep].copy()
