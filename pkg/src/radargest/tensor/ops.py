"""Differentiable operations for the super-resolution and classifier nets.

Every function takes :class:`~radargest.tensor.autodiff.Tensor` operands
(scalars are promoted), computes the forward result with numpy, and
registers an analytic backward closure on the autodiff graph.

Spatial operations accept either an unbatched ``(C, H, W)`` layout or a
batched ``(B, C, H, W)`` one; the channel axis is always third from the
end.  Gradient checks against central finite differences for all of
these live in the test suite.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf

from .. import fft as _fft
from . import kernels
from .autodiff import Tensor, record

_INV_SQRT2 = 0.7071067811865475244
_INV_SQRT_2PI = 0.3989422804014326779


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcasted gradient back to the operand's shape."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    keep = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if keep:
        g = g.sum(axis=keep, keepdims=True)
    return g.reshape(shape)


def _ensure_batched(data: np.ndarray, kind: str) -> tuple[np.ndarray, bool]:
    if data.ndim == 3:
        return data[None], True
    if data.ndim == 4:
        return data, False
    raise ValueError(f"{kind} expects a 3D (C,H,W) or 4D (B,C,H,W) input, got ndim={data.ndim}")


# ---------------------------------------------------------------------------
# Elementwise arithmetic and reductions
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data + b.data)
    return record(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data - b.data)
    return record(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data * b.data)

    def bwd(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return record(out, (a, b), bwd)


def neg(x) -> Tensor:
    x = _as_tensor(x)
    return record(Tensor(-x.data), (x,), lambda g: (-g,))


def _normalize_axis(axis, ndim) -> tuple[int, ...] | None:
    if axis is None:
        return None
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def sum(x, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001 - mirrors numpy naming
    x = _as_tensor(x)
    ax = _normalize_axis(axis, x.ndim)
    out = Tensor(x.data.sum(axis=ax, keepdims=keepdims))

    def bwd(g):
        gg = g
        if ax is not None and not keepdims:
            gg = np.expand_dims(gg, ax)
        return (np.broadcast_to(gg, x.shape).copy(),)

    return record(out, (x,), bwd)


def mean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    ax = _normalize_axis(axis, x.ndim)
    count = x.size if ax is None else int(np.prod([x.shape[a] for a in ax]))
    out = Tensor(x.data.mean(axis=ax, keepdims=keepdims))

    def bwd(g):
        gg = g
        if ax is not None and not keepdims:
            gg = np.expand_dims(gg, ax)
        return (np.broadcast_to(gg, x.shape).copy() / count,)

    return record(out, (x,), bwd)


def abs_(x) -> Tensor:
    """Elementwise absolute value; the subgradient at 0 is taken as 0."""
    x = _as_tensor(x)
    out = Tensor(np.abs(x.data))
    return record(out, (x,), lambda g: (g * np.sign(x.data),))


def gelu(x) -> Tensor:
    """Exact GELU: x * Phi(x) with Phi the standard normal CDF."""
    x = _as_tensor(x)
    cdf = 0.5 * (1.0 + erf(x.data * _INV_SQRT2))
    out = Tensor(x.data * cdf)

    def bwd(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x.data * x.data)
        return (g * (cdf + x.data * pdf),)

    return record(out, (x,), bwd)


def reshape(x, shape) -> Tensor:
    x = _as_tensor(x)
    out = Tensor(x.data.reshape(shape))
    return record(out, (x,), lambda g: (g.reshape(x.shape),))


def moveaxis(x, src: int, dst: int) -> Tensor:
    x = _as_tensor(x)
    out = Tensor(np.moveaxis(x.data, src, dst).copy())
    return record(out, (x,), lambda g: (np.moveaxis(g, dst, src).copy(),))


def take_index(x, index: int, axis: int) -> Tensor:
    """Select one slice along ``axis`` (the axis is removed)."""
    x = _as_tensor(x)
    ax = axis % x.ndim
    idx = index % x.shape[ax]
    out = Tensor(np.take(x.data, idx, axis=ax).copy())

    def bwd(g):
        gx = np.zeros(x.shape)
        sl = [slice(None)] * x.ndim
        sl[ax] = idx
        gx[tuple(sl)] = g
        return (gx,)

    return record(out, (x,), bwd)


# ---------------------------------------------------------------------------
# Dense layers
# ---------------------------------------------------------------------------

def linear(x, w, b=None) -> Tensor:
    """Affine map on the last axis: y = x @ w.T + b, w shaped (out, in)."""
    x, w = _as_tensor(x), _as_tensor(w)
    if w.ndim != 2 or x.shape[-1] != w.shape[1]:
        raise ValueError(
            f"linear: last input axis {x.shape[-1:]} does not match weight columns {w.shape}"
        )
    y = x.data @ w.data.T
    inputs = [x, w]
    if b is not None:
        b = _as_tensor(b)
        if b.shape != (w.shape[0],):
            raise ValueError(f"linear: bias shape {b.shape} does not match output size {w.shape[0]}")
        y = y + b.data
        inputs.append(b)

    def bwd(g):
        gx = g @ w.data
        g2 = g.reshape(-1, g.shape[-1])
        gw = g2.T @ x.data.reshape(-1, x.shape[-1])
        if b is None:
            return gx, gw
        return gx, gw, g2.sum(axis=0)

    return record(Tensor(y), tuple(inputs), bwd)


# ---------------------------------------------------------------------------
# Convolutions
# ---------------------------------------------------------------------------

def conv2d(x, w, b=None, stride: int = 1, padding: int = 0, groups: int = 1) -> Tensor:
    """2D cross-correlation with zero padding and channel groups.

    x: (C_in, H, W) or (B, C_in, H, W); w: (C_out, C_in/groups, kh, kw).
    Output spatial dims are floor((H + 2*padding - kh)/stride) + 1.
    """
    x, w = _as_tensor(x), _as_tensor(w)
    if w.ndim != 4:
        raise ValueError(f"conv2d: weight must be 4D (C_out, C_in/groups, kh, kw), got {w.shape}")
    x4, squeeze = _ensure_batched(x.data, "conv2d")
    bsz, c_in, h, wd = x4.shape
    c_out, cpg, kh, kw = w.shape
    if c_in % groups or c_out % groups:
        raise ValueError(
            f"conv2d: channel axes not divisible by groups={groups} (C_in={c_in}, C_out={c_out})"
        )
    if cpg != c_in // groups:
        raise ValueError(
            f"conv2d: weight channel axis expects C_in/groups={c_in // groups} but has {cpg}"
        )
    p, s = int(padding), int(stride)
    oh = (h + 2 * p - kh) // s + 1
    ow = (wd + 2 * p - kw) // s + 1
    if oh < 1 or ow < 1:
        raise ValueError(
            f"conv2d: kernel ({kh},{kw}) with padding {p} exceeds padded input ({h},{wd})"
        )
    if b is not None:
        b = _as_tensor(b)
        if b.shape != (c_out,):
            raise ValueError(f"conv2d: bias axis must have {c_out} entries, got {b.shape}")

    depthwise = groups == c_in == c_out
    if depthwise:
        wk = np.ascontiguousarray(w.data[:, 0])
        y = kernels.depthwise_conv2d_fwd(np.ascontiguousarray(x4), wk, s, p, p)
    else:
        xp = np.pad(x4, ((0, 0), (0, 0), (p, p), (p, p)))
        win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::s, ::s]
        opg = c_out // groups
        pieces = []
        for gi in range(groups):
            wing = win[:, gi * cpg : (gi + 1) * cpg]
            wg = w.data[gi * opg : (gi + 1) * opg]
            pieces.append(np.einsum("bihwkl,oikl->bohw", wing, wg, optimize=True))
        y = np.concatenate(pieces, axis=1)
    if b is not None:
        y = y + b.data[None, :, None, None]

    inputs = [x, w] + ([b] if b is not None else [])

    def bwd(g):
        g4 = g[None] if squeeze else g
        g4 = np.ascontiguousarray(g4)
        if depthwise:
            gx4 = kernels.depthwise_conv2d_bwd_x(g4, wk, x4.shape, s, p, p)
            gw = kernels.depthwise_conv2d_bwd_w(g4, np.ascontiguousarray(x4), kh, kw, s, p, p)
            gw = gw[:, None]
        else:
            xp_b = np.pad(x4, ((0, 0), (0, 0), (p, p), (p, p)))
            win_b = sliding_window_view(xp_b, (kh, kw), axis=(2, 3))[:, :, ::s, ::s]
            opg = c_out // groups
            gxp = np.zeros_like(xp_b)
            gw = np.empty_like(w.data)
            for gi in range(groups):
                gg = g4[:, gi * opg : (gi + 1) * opg]
                wg = w.data[gi * opg : (gi + 1) * opg]
                wing = win_b[:, gi * cpg : (gi + 1) * cpg]
                gw[gi * opg : (gi + 1) * opg] = np.einsum(
                    "bihwkl,bohw->oikl", wing, gg, optimize=True
                )
                for ki in range(kh):
                    for kj in range(kw):
                        gxp[:, gi * cpg : (gi + 1) * cpg, ki : ki + s * oh : s, kj : kj + s * ow : s] += np.einsum(
                            "bohw,oi->bihw", gg, wg[:, :, ki, kj], optimize=True
                        )
            gx4 = gxp[:, :, p : p + h, p : p + wd]
        gx = gx4[0] if squeeze else gx4
        if b is None:
            return gx, gw
        return gx, gw, g4.sum(axis=(0, 2, 3))

    out = Tensor(y[0] if squeeze else y)
    return record(out, tuple(inputs), bwd)


def dilated_conv1d(x, w, b=None, dilation: int = 1, causal_padding: bool = True) -> Tensor:
    """Dilated 1D cross-correlation along the time axis.

    x: (C_in, T) or (B, C_in, T); w: (C_out, C_in, k).  With causal
    padding the output keeps length T and position t sees inputs
    t, t-d, ..., t-(k-1)d only.
    """
    x, w = _as_tensor(x), _as_tensor(w)
    if dilation < 1:
        raise ValueError(f"dilated_conv1d: dilation must be >= 1, got {dilation}")
    if w.ndim != 3:
        raise ValueError(f"dilated_conv1d: weight must be 3D (C_out, C_in, k), got {w.shape}")
    squeeze = x.ndim == 2
    x3 = x.data[None] if squeeze else x.data
    if x3.ndim != 3:
        raise ValueError(f"dilated_conv1d: input must be (C,T) or (B,C,T), got {x.shape}")
    bsz, c_in, t = x3.shape
    c_out, wc_in, k = w.shape
    if wc_in != c_in:
        raise ValueError(f"dilated_conv1d: channel axis mismatch: input {c_in} vs weight {wc_in}")
    d = int(dilation)
    span = (k - 1) * d + 1
    left = (k - 1) * d if causal_padding else 0
    if span > t + left:
        raise ValueError(
            f"dilated_conv1d: dilated kernel span {span} exceeds padded length {t + left}"
        )
    if b is not None:
        b = _as_tensor(b)
        if b.shape != (c_out,):
            raise ValueError(f"dilated_conv1d: bias must have {c_out} entries, got {b.shape}")

    xp = np.pad(x3, ((0, 0), (0, 0), (left, 0)))
    win = sliding_window_view(xp, span, axis=2)[..., ::d]  # (B, C_in, T_out, k)
    y = np.einsum("bitk,oik->bot", win, w.data, optimize=True)
    t_out = y.shape[2]
    if b is not None:
        y = y + b.data[None, :, None]

    inputs = [x, w] + ([b] if b is not None else [])

    def bwd(g):
        g3 = g[None] if squeeze else g
        gw = np.einsum("bitk,bot->oik", win, g3, optimize=True)
        gxp = np.zeros_like(xp)
        for j in range(k):
            gxp[:, :, j * d : j * d + t_out] += np.einsum(
                "bot,oi->bit", g3, w.data[:, :, j], optimize=True
            )
        gx3 = gxp[:, :, left:]
        gx = gx3[0] if squeeze else gx3
        if b is None:
            return gx, gw
        return gx, gw, g3.sum(axis=(0, 2))

    out = Tensor(y[0] if squeeze else y)
    return record(out, tuple(inputs), bwd)


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

def adaptive_max_pool2d(x, out_h: int, out_w: int) -> Tensor:
    """Max pooling onto an (out_h, out_w) grid with adaptive windows.

    Output cell (i, j) covers input rows [floor(i*H/out_h),
    ceil((i+1)*H/out_h)); gradient routes to each window's argmax, first
    occurrence (row-major) on ties.
    """
    x = _as_tensor(x)
    if out_h <= 0 or out_w <= 0:
        raise ValueError(f"adaptive_max_pool2d: output dims must be positive, got ({out_h},{out_w})")
    x4, squeeze = _ensure_batched(x.data, "adaptive_max_pool2d")
    h, w = x4.shape[2], x4.shape[3]
    if out_h > h or out_w > w:
        raise ValueError(
            f"adaptive_max_pool2d: output ({out_h},{out_w}) exceeds input ({h},{w})"
        )
    y, idx = kernels.adaptive_maxpool2d_fwd(np.ascontiguousarray(x4), int(out_h), int(out_w))

    def bwd(g):
        g4 = g[None] if squeeze else g
        gx4 = kernels.adaptive_maxpool2d_bwd(np.ascontiguousarray(g4), idx, h, w)
        return (gx4[0] if squeeze else gx4,)

    return record(Tensor(y[0] if squeeze else y), (x,), bwd)


def interpolate_nearest(x, out_h: int, out_w: int) -> Tensor:
    """Nearest-neighbor resize: out[i,j] = in[floor(i*H/out_h), floor(j*W/out_w)]."""
    x = _as_tensor(x)
    if out_h <= 0 or out_w <= 0:
        raise ValueError(f"interpolate_nearest: output dims must be positive, got ({out_h},{out_w})")
    x4, squeeze = _ensure_batched(x.data, "interpolate_nearest")
    h, w = x4.shape[2], x4.shape[3]
    y = kernels.resize_nearest_fwd(np.ascontiguousarray(x4), int(out_h), int(out_w))

    def bwd(g):
        g4 = g[None] if squeeze else g
        gx4 = kernels.resize_nearest_bwd(np.ascontiguousarray(g4), h, w)
        return (gx4[0] if squeeze else gx4,)

    return record(Tensor(y[0] if squeeze else y), (x,), bwd)


def pixel_shuffle(x, ds: int, df: int) -> Tensor:
    """Rearrange (C*ds*df, H, W) into (C, H*ds, W*df).

    out[c, h*ds + i, w*df + j] = in[c*ds*df + i*df + j, h, w].
    """
    x = _as_tensor(x)
    c_total = x.shape[-3]
    if c_total % (ds * df):
        raise ValueError(
            f"pixel_shuffle: channel axis {c_total} not divisible by ds*df={ds * df}"
        )
    lead = x.shape[:-3]
    c = c_total // (ds * df)
    h, w = x.shape[-2], x.shape[-1]
    v = x.data.reshape(lead + (c, ds, df, h, w))
    nd = v.ndim
    v = np.moveaxis(v, (nd - 4, nd - 3), (nd - 3, nd - 1))  # -> (..., c, h, ds, w, df)
    y = v.reshape(lead + (c, h * ds, w * df))

    def bwd(g):
        return (_unshuffle_data(g, ds, df),)

    return record(Tensor(y.copy()), (x,), bwd)


def _unshuffle_data(data: np.ndarray, ds: int, df: int) -> np.ndarray:
    lead = data.shape[:-3]
    c = data.shape[-3]
    hb, wb = data.shape[-2], data.shape[-1]
    h, w = hb // ds, wb // df
    v = data.reshape(lead + (c, h, ds, w, df))
    nd = v.ndim
    v = np.moveaxis(v, (nd - 3, nd - 1), (nd - 4, nd - 3))  # -> (..., c, ds, df, h, w)
    return v.reshape(lead + (c * ds * df, h, w)).copy()


def pixel_unshuffle(x, ds: int, df: int) -> Tensor:
    """Inverse of :func:`pixel_shuffle`."""
    x = _as_tensor(x)
    hb, wb = x.shape[-2], x.shape[-1]
    if hb % ds or wb % df:
        raise ValueError(
            f"pixel_unshuffle: spatial dims ({hb},{wb}) not divisible by ({ds},{df})"
        )
    y = _unshuffle_data(x.data, ds, df)
    lead = x.shape[:-3]
    c = x.shape[-3]

    def bwd(g):
        v = g.reshape(lead + (c, ds, df, hb // ds, wb // df))
        nd = v.ndim
        v = np.moveaxis(v, (nd - 4, nd - 3), (nd - 3, nd - 1))
        return (v.reshape(lead + (c, hb, wb)).copy(),)

    return record(Tensor(y), (x,), bwd)


# ---------------------------------------------------------------------------
# Normalization, channel bookkeeping
# ---------------------------------------------------------------------------

def layer_norm(x, gamma, beta, eps: float = 1e-6) -> Tensor:
    """Normalize the channel vector at each spatial position.

    Statistics (mean, biased variance) are taken over the channel axis
    independently per (batch, h, w) position; gamma/beta are per-channel.
    """
    if eps <= 0:
        raise ValueError(f"layer_norm: eps must be positive, got {eps}")
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    if x.ndim not in (3, 4):
        raise ValueError(f"layer_norm: input must be (C,H,W) or (B,C,H,W), got {x.shape}")
    ch_ax = x.ndim - 3
    c = x.shape[ch_ax]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ValueError(
            f"layer_norm: gamma/beta must be per-channel vectors of length {c}, "
            f"got {gamma.shape} and {beta.shape}"
        )
    gshape = (c, 1, 1)
    mu = x.data.mean(axis=ch_ax, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=ch_ax, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    y = xhat * gamma.data.reshape(gshape) + beta.data.reshape(gshape)
    reduce_axes = tuple(i for i in range(x.ndim) if i != ch_ax)

    def bwd(g):
        dxhat = g * gamma.data.reshape(gshape)
        dvar = (dxhat * xc).sum(axis=ch_ax, keepdims=True) * (-0.5) * inv**3
        dmu = -(dxhat * inv).sum(axis=ch_ax, keepdims=True)
        gx = dxhat * inv + (2.0 / c) * dvar * xc + dmu / c
        dgamma = (g * xhat).sum(axis=reduce_axes)
        dbeta = g.sum(axis=reduce_axes)
        return gx, dgamma, dbeta

    return record(Tensor(y), (x, gamma, beta), bwd)


def split_channels(x, k: int) -> list[Tensor]:
    """Split the channel axis into k contiguous equal groups."""
    x = _as_tensor(x)
    c = x.shape[-3]
    if k < 1 or c % k:
        raise ValueError(f"split_channels: {c} channels not divisible into k={k} groups")
    size = c // k
    parts = []
    for i in range(k):
        sl = [slice(None)] * x.ndim
        sl[x.ndim - 3] = slice(i * size, (i + 1) * size)
        sl = tuple(sl)

        def bwd(g, sl=sl):
            gx = np.zeros(x.shape)
            gx[sl] = g
            return (gx,)

        parts.append(record(Tensor(x.data[sl].copy()), (x,), bwd))
    return parts


def concat_channels(parts: list[Tensor]) -> Tensor:
    """Concatenate tensors along the channel axis (inverse of split)."""
    if not parts:
        raise ValueError("concat_channels: need at least one tensor")
    parts = [_as_tensor(p) for p in parts]
    ax = parts[0].ndim - 3
    y = np.concatenate([p.data for p in parts], axis=ax)
    sizes = [p.shape[ax] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        outs = []
        for i in range(len(parts)):
            sl = [slice(None)] * g.ndim
            sl[ax] = slice(offsets[i], offsets[i + 1])
            outs.append(g[tuple(sl)].copy())
        return tuple(outs)

    return record(Tensor(y), tuple(parts), bwd)


# ---------------------------------------------------------------------------
# Complex-plane helpers (real/imaginary tensor pairs)
# ---------------------------------------------------------------------------

def magnitude(re, im, eps: float = 1e-12) -> Tensor:
    """Complex magnitude sqrt(re^2 + im^2 + eps) of a real/imag pair."""
    re, im = _as_tensor(re), _as_tensor(im)
    if re.shape != im.shape:
        raise ValueError(f"magnitude: real/imag shapes differ: {re.shape} vs {im.shape}")
    m = np.sqrt(re.data * re.data + im.data * im.data + eps)

    def bwd(g):
        return g * re.data / m, g * im.data / m

    return record(Tensor(m), (re, im), bwd)


def dft_along(re, im, axis: int) -> tuple[Tensor, Tensor]:
    """Unnormalized forward DFT of a real/imag tensor pair along ``axis``.

    Returns the (real, imaginary) output pair.  Gradients flow back
    through the transform via the conjugate identity grad_x =
    conj(F(conj(grad_y))), exploiting the symmetry of the DFT matrix.
    """
    re, im = _as_tensor(re), _as_tensor(im)
    if re.shape != im.shape:
        raise ValueError(f"dft_along: real/imag shapes differ: {re.shape} vs {im.shape}")
    z = _fft.fft(re.data + 1j * im.data, axis=axis)

    def bwd_re(g):
        t = _fft.fft(g.astype(np.complex128), axis=axis)
        return t.real.copy(), -t.imag


    def bwd_im(g):
        t = _fft.fft(g.astype(np.complex128), axis=axis)
        return t.imag.copy(), t.real.copy()

    out_re = record(Tensor(z.real.copy()), (re, im), bwd_re)
    out_im = record(Tensor(z.imag.copy()), (re, im), bwd_im)
    return out_re, out_im
