# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for the hot spatial ops (depthwise conv, adaptive
max-pool, nearest resize).  Signature-compatible with the numpy fallback
in radargest.tensor._kernels_py; the backend selector picks one at
import time."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def depthwise_conv2d_fwd(double[:, :, :, ::1] x, double[:, :, ::1] w,
                         int stride, int ph, int pw):
    cdef Py_ssize_t nb = x.shape[0], nc = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t kh = w.shape[1], kw = w.shape[2]
    cdef Py_ssize_t oh = (h + 2 * ph - kh) // stride + 1
    cdef Py_ssize_t ow = (wd + 2 * pw - kw) // stride + 1
    out = np.zeros((nb, nc, oh, ow))
    cdef double[:, :, :, ::1] y = out
    cdef Py_ssize_t b, c, i, j, a, d, hi, wj
    cdef double acc
    for b in range(nb):
        for c in range(nc):
            for i in range(oh):
                for j in range(ow):
                    acc = 0.0
                    for a in range(kh):
                        hi = i * stride + a - ph
                        if hi < 0 or hi >= h:
                            continue
                        for d in range(kw):
                            wj = j * stride + d - pw
                            if wj < 0 or wj >= wd:
                                continue
                            acc += x[b, c, hi, wj] * w[c, a, d]
                    y[b, c, i, j] = acc
    return out


def depthwise_conv2d_bwd_x(double[:, :, :, ::1] gy, double[:, :, ::1] w,
                           x_shape, int stride, int ph, int pw):
    cdef Py_ssize_t nb = x_shape[0], nc = x_shape[1], h = x_shape[2], wd = x_shape[3]
    cdef Py_ssize_t kh = w.shape[1], kw = w.shape[2]
    cdef Py_ssize_t oh = gy.shape[2], ow = gy.shape[3]
    out = np.zeros((nb, nc, h, wd))
    cdef double[:, :, :, ::1] gx = out
    cdef Py_ssize_t b, c, i, j, a, d, hi, wj
    cdef double g
    for b in range(nb):
        for c in range(nc):
            for i in range(oh):
                for j in range(ow):
                    g = gy[b, c, i, j]
                    for a in range(kh):
                        hi = i * stride + a - ph
                        if hi < 0 or hi >= h:
                            continue
                        for d in range(kw):
                            wj = j * stride + d - pw
                            if wj < 0 or wj >= wd:
                                continue
                            gx[b, c, hi, wj] += g * w[c, a, d]
    return out


def depthwise_conv2d_bwd_w(double[:, :, :, ::1] gy, double[:, :, :, ::1] x,
                           int kh, int kw, int stride, int ph, int pw):
    cdef Py_ssize_t nb = x.shape[0], nc = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t oh = gy.shape[2], ow = gy.shape[3]
    out = np.zeros((nc, kh, kw))
    cdef double[:, :, ::1] gw = out
    cdef Py_ssize_t b, c, i, j, a, d, hi, wj
    cdef double g
    for b in range(nb):
        for c in range(nc):
            for i in range(oh):
                for j in range(ow):
                    g = gy[b, c, i, j]
                    for a in range(kh):
                        hi = i * stride + a - ph
                        if hi < 0 or hi >= h:
                            continue
                        for d in range(kw):
                            wj = j * stride + d - pw
                            if wj < 0 or wj >= wd:
                                continue
                            gw[c, a, d] += g * x[b, c, hi, wj]
    return out


def adaptive_maxpool2d_fwd(double[:, :, :, ::1] x, int oh, int ow):
    cdef Py_ssize_t nb = x.shape[0], nc = x.shape[1], h = x.shape[2], w = x.shape[3]
    out = np.empty((nb, nc, oh, ow))
    indices = np.empty((nb, nc, oh, ow), dtype=np.int64)
    cdef double[:, :, :, ::1] y = out
    cdef cnp.int64_t[:, :, :, ::1] idx = indices
    cdef Py_ssize_t b, c, i, j, r, s, r0, r1, c0, c1, best_r, best_c
    cdef double best, v
    for i in range(oh):
        r0 = (i * h) // oh
        r1 = ((i + 1) * h + oh - 1) // oh
        for j in range(ow):
            c0 = (j * w) // ow
            c1 = ((j + 1) * w + ow - 1) // ow
            for b in range(nb):
                for c in range(nc):
                    best = x[b, c, r0, c0]
                    best_r = r0
                    best_c = c0
                    for r in range(r0, r1):
                        for s in range(c0, c1):
                            v = x[b, c, r, s]
                            if v > best:
                                best = v
                                best_r = r
                                best_c = s
                    y[b, c, i, j] = best
                    idx[b, c, i, j] = best_r * w + best_c
    return out, indices


def adaptive_maxpool2d_bwd(double[:, :, :, ::1] gy, cnp.int64_t[:, :, :, ::1] idx,
                           int h, int w):
    cdef Py_ssize_t nb = gy.shape[0], nc = gy.shape[1], oh = gy.shape[2], ow = gy.shape[3]
    out = np.zeros((nb, nc, h, w))
    cdef double[:, :, :, ::1] gx = out
    cdef Py_ssize_t b, c, i, j, flat
    for b in range(nb):
        for c in range(nc):
            for i in range(oh):
                for j in range(ow):
                    flat = idx[b, c, i, j]
                    gx[b, c, flat // w, flat % w] += gy[b, c, i, j]
    return out


def resize_nearest_fwd(double[:, :, :, ::1] x, int oh, int ow):
    cdef Py_ssize_t nb = x.shape[0], nc = x.shape[1], h = x.shape[2], w = x.shape[3]
    out = np.empty((nb, nc, oh, ow))
    cdef double[:, :, :, ::1] y = out
    cdef Py_ssize_t b, c, i, j
    for b in range(nb):
        for c in range(nc):
            for i in range(oh):
                for j in range(ow):
                    y[b, c, i, j] = x[b, c, (i * h) // oh, (j * w) // ow]
    return out


def resize_nearest_bwd(double[:, :, :, ::1] gy, int h, int w):
    cdef Py_ssize_t nb = gy.shape[0], nc = gy.shape[1], oh = gy.shape[2], ow = gy.shape[3]
    out = np.zeros((nb, nc, h, w))
    cdef double[:, :, :, ::1] gx = out
    cdef Py_ssize_t b, c, i, j
    for b in range(nb):
        for c in range(nc):
            for i in range(oh):
                for j in range(ow):
                    gx[b, c, (i * h) // oh, (j * w) // ow] += gy[b, c, i, j]
    return out
