"""Pure-numpy implementations of the hot spatial kernels.

These mirror the compiled extension (``radargest._core``) signature for
signature; the backend selector in :mod:`radargest.tensor.kernels` picks
one of the two at import time.  All functions take and return float64
C-contiguous arrays with an explicit batch axis.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def depthwise_conv2d_fwd(x: np.ndarray, w: np.ndarray, stride: int, ph: int, pw: int) -> np.ndarray:
    """Per-channel 2D cross-correlation.

    x: (B, C, H, W); w: (C, kh, kw); zero padding (ph, pw) per side.
    """
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    kh, kw = w.shape[1], w.shape[2]
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    return np.einsum("bchwkl,ckl->bchw", win, w, optimize=True)


def depthwise_conv2d_bwd_x(
    gy: np.ndarray, w: np.ndarray, x_shape: tuple, stride: int, ph: int, pw: int
) -> np.ndarray:
    """Gradient of depthwise conv w.r.t. its input."""
    b, c, h, wd = x_shape
    kh, kw = w.shape[1], w.shape[2]
    oh, ow = gy.shape[2], gy.shape[3]
    gxp = np.zeros((b, c, h + 2 * ph, wd + 2 * pw))
    for ki in range(kh):
        for kj in range(kw):
            gxp[:, :, ki : ki + stride * oh : stride, kj : kj + stride * ow : stride] += (
                gy * w[None, :, ki, kj, None, None]
            )
    return gxp[:, :, ph : ph + h, pw : pw + wd]


def depthwise_conv2d_bwd_w(
    gy: np.ndarray, x: np.ndarray, kh: int, kw: int, stride: int, ph: int, pw: int
) -> np.ndarray:
    """Gradient of depthwise conv w.r.t. its per-channel kernels."""
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    return np.einsum("bchwkl,bchw->ckl", win, gy, optimize=True)


def adaptive_maxpool2d_fwd(x: np.ndarray, oh: int, ow: int) -> tuple[np.ndarray, np.ndarray]:
    """Adaptive max pooling; returns (values, flat argmax index into H*W).

    Output cell (i, j) pools input rows [floor(i*H/oh), ceil((i+1)*H/oh))
    and the analogous columns.  Ties resolve to the first element in
    row-major window order.
    """
    b, c, h, w = x.shape
    y = np.empty((b, c, oh, ow))
    idx = np.empty((b, c, oh, ow), dtype=np.int64)
    for i in range(oh):
        r0 = (i * h) // oh
        r1 = -((-(i + 1) * h) // oh)  # ceil((i+1)*h/oh)
        for j in range(ow):
            c0 = (j * w) // ow
            c1 = -((-(j + 1) * w) // ow)
            window = x[:, :, r0:r1, c0:c1]
            flat = window.reshape(b, c, -1)
            local = np.argmax(flat, axis=-1)
            y[:, :, i, j] = np.take_along_axis(flat, local[..., None], axis=-1)[..., 0]
            rows = r0 + local // (c1 - c0)
            cols = c0 + local % (c1 - c0)
            idx[:, :, i, j] = rows * w + cols
    return y, idx


def adaptive_maxpool2d_bwd(gy: np.ndarray, idx: np.ndarray, h: int, w: int) -> np.ndarray:
    """Scatter pooled gradients back to their argmax source positions."""
    b, c = gy.shape[0], gy.shape[1]
    gx = np.zeros((b * c, h * w))
    flat_idx = idx.reshape(b * c, -1)
    flat_gy = gy.reshape(b * c, -1)
    np.add.at(gx, (np.arange(b * c)[:, None], flat_idx), flat_gy)
    return gx.reshape(b, c, h, w)


def resize_nearest_fwd(x: np.ndarray, oh: int, ow: int) -> np.ndarray:
    """Nearest-neighbor resize: out[i, j] = in[floor(i*H/oh), floor(j*W/ow)]."""
    h, w = x.shape[2], x.shape[3]
    rows = (np.arange(oh) * h) // oh
    cols = (np.arange(ow) * w) // ow
    return np.ascontiguousarray(x[:, :, rows[:, None], cols[None, :]])


def resize_nearest_bwd(gy: np.ndarray, h: int, w: int) -> np.ndarray:
    """Sum resize gradients over all output positions sharing a source."""
    oh, ow = gy.shape[2], gy.shape[3]
    rows = (np.arange(oh) * h) // oh
    cols = (np.arange(ow) * w) // ow
    rsel = np.zeros((oh, h))
    rsel[np.arange(oh), rows] = 1.0
    csel = np.zeros((ow, w))
    csel[np.arange(ow), cols] = 1.0
    return np.einsum("ih,bcij,jw->bchw", rsel, gy, csel, optimize=True)
