"""Feature-modulation super-resolution network for radar cubes.

The network treats each frame of the 2-channel (real/imag) recording as
an independent image: a shallow 3x3 convolution, a stack of
feature-mixing blocks, a global residual connection, and a convolution
plus pixel-shuffle upsampler that scales slow time by ``ds`` and fast
time by ``df``.

Each feature-mixing block applies two residual stages:

    y = safm(layer_norm(x)) + x
    z = ccm(layer_norm(y)) + y

where ``safm`` is the spatially-adaptive modulation layer (four channel
groups processed at progressively coarser scales, fused by a 1x1
convolution, gated through GELU, and multiplied back onto the input)
and ``ccm`` is a convolutional channel mixer (3x3 expansion to twice
the channels, GELU, 1x1 compression back).

A recursive wrapper applies one x2 model repeatedly, sharing its
parameters, to reach x4 or x8 upscaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .params import ParamStore
from .tensor import Tensor, ops

__all__ = [
    "SafmnConfig",
    "build_safmn",
    "safmn_parameter_count",
    "safm_layer",
    "ccm_layer",
    "fmm_block",
    "safmn_forward",
    "recursive_forward",
]


@dataclass(frozen=True)
class SafmnConfig:
    """Architecture hyper-parameters of the super-resolution network."""

    base_channels: int = 36
    num_fmm_blocks: int = 8
    ds: int = 2
    df: int = 2
    input_channels: int = 2
    use_bias: bool = True

    def __post_init__(self) -> None:
        if self.base_channels % 4 != 0 or self.base_channels < 4:
            raise ConfigError(
                f"base_channels must be a positive multiple of 4, got {self.base_channels}"
            )
        if self.num_fmm_blocks < 1:
            raise ConfigError(f"num_fmm_blocks must be >= 1, got {self.num_fmm_blocks}")
        if self.ds < 1 or self.df < 1:
            raise ConfigError(f"upscale factors must be >= 1, got ({self.ds}, {self.df})")
        if self.input_channels < 1:
            raise ConfigError(f"input_channels must be >= 1, got {self.input_channels}")


def _conv_param_count(c_out: int, c_in_per_group: int, k: int, bias: bool) -> int:
    return c_out * c_in_per_group * k * k + (c_out if bias else 0)


def safmn_parameter_count(config: SafmnConfig) -> int:
    """Closed-form parameter count for a given configuration."""
    c = config.base_channels
    bias = config.use_bias
    quarter = c // 4
    total = _conv_param_count(c, config.input_channels, 3, bias)  # shallow
    per_block = (
        2 * c  # first layer norm (gamma, beta)
        + 4 * _conv_param_count(quarter, 1, 3, bias)  # four depthwise 3x3
        + _conv_param_count(c, c, 1, bias)  # 1x1 fuse
        + 2 * c  # second layer norm
        + _conv_param_count(2 * c, c, 3, bias)  # ccm expand
        + _conv_param_count(c, 2 * c, 1, bias)  # ccm compress
    )
    total += config.num_fmm_blocks * per_block
    out_ch = config.input_channels * config.ds * config.df
    total += _conv_param_count(out_ch, c, 3, bias)  # upsampler conv
    return total


def _init_conv(store: ParamStore, name: str, c_out: int, c_in_per_group: int, k: int,
               bias: bool, rng: np.random.Generator) -> None:
    fan_in = c_in_per_group * k * k
    store.uniform(f"{name}.w", (c_out, c_in_per_group, k, k), fan_in, rng)
    if bias:
        store.uniform(f"{name}.b", (c_out,), fan_in, rng)


def build_safmn(config: SafmnConfig, rng_seed: int = 0) -> ParamStore:
    """Create and initialize all network parameters, deterministic in seed."""
    rng = np.random.default_rng(rng_seed)
    store = ParamStore()
    c = config.base_channels
    quarter = c // 4
    bias = config.use_bias

    _init_conv(store, "shallow", c, config.input_channels, 3, bias, rng)
    for i in range(config.num_fmm_blocks):
        store.create(f"fmm{i}.ln1.gamma", np.ones(c))
        store.create(f"fmm{i}.ln1.beta", np.zeros(c))
        for j in range(4):
            _init_conv(store, f"fmm{i}.safm.dw{j}", quarter, 1, 3, bias, rng)
        _init_conv(store, f"fmm{i}.safm.fuse", c, c, 1, bias, rng)
        store.create(f"fmm{i}.ln2.gamma", np.ones(c))
        store.create(f"fmm{i}.ln2.beta", np.zeros(c))
        _init_conv(store, f"fmm{i}.ccm.expand", 2 * c, c, 3, bias, rng)
        _init_conv(store, f"fmm{i}.ccm.compress", c, 2 * c, 1, bias, rng)
    out_ch = config.input_channels * config.ds * config.df
    _init_conv(store, "up", out_ch, c, 3, bias, rng)
    return store


def _conv(store: ParamStore, name: str, x: Tensor, padding: int, groups: int = 1) -> Tensor:
    bias = store[f"{name}.b"] if f"{name}.b" in store else None
    return ops.conv2d(x, store[f"{name}.w"], bias, padding=padding, groups=groups)


def safm_layer(x: Tensor, store: ParamStore, prefix: str) -> Tensor:
    """Multi-scale modulation: process four channel groups at scales
    1, 1/2, 1/4, 1/8 (pooled sizes clamped to >= 1), fuse, gate, and
    multiply back onto the input."""
    c = x.shape[-3]
    if c % 4 != 0:
        raise ConfigError(f"modulation layer needs channels divisible by 4, got {c}")
    h, w = x.shape[-2], x.shape[-1]
    parts = ops.split_channels(x, 4)
    quarter = c // 4
    processed = [_conv(store, f"{prefix}.dw0", parts[0], padding=1, groups=quarter)]
    for i in (1, 2, 3):
        ph, pw = max(h >> i, 1), max(w >> i, 1)
        p = ops.adaptive_max_pool2d(parts[i], ph, pw)
        p = _conv(store, f"{prefix}.dw{i}", p, padding=1, groups=quarter)
        processed.append(ops.interpolate_nearest(p, h, w))
    fused = _conv(store, f"{prefix}.fuse", ops.concat_channels(processed), padding=0)
    return ops.mul(ops.gelu(fused), x)


def ccm_layer(x: Tensor, store: ParamStore, prefix: str) -> Tensor:
    """Channel mixer: 3x3 conv doubling channels, GELU, 1x1 back down."""
    y = ops.gelu(_conv(store, f"{prefix}.expand", x, padding=1))
    return _conv(store, f"{prefix}.compress", y, padding=0)


def fmm_block(x: Tensor, store: ParamStore, prefix: str) -> Tensor:
    """Two pre-normalized residual stages: modulation then channel mixing."""
    normed = ops.layer_norm(x, store[f"{prefix}.ln1.gamma"], store[f"{prefix}.ln1.beta"])
    y = ops.add(safm_layer(normed, store, f"{prefix}.safm"), x)
    normed2 = ops.layer_norm(y, store[f"{prefix}.ln2.gamma"], store[f"{prefix}.ln2.beta"])
    return ops.add(ccm_layer(normed2, store, f"{prefix}.ccm"), y)


def _image_forward(x: Tensor, store: ParamStore, config: SafmnConfig) -> Tensor:
    """Run the network on a (B, input_channels, H, W) image batch."""
    f0 = _conv(store, "shallow", x, padding=1)
    h = f0
    for i in range(config.num_fmm_blocks):
        h = fmm_block(h, store, f"fmm{i}")
    h = ops.add(h, f0)  # global residual
    up = _conv(store, "up", h, padding=1)
    return ops.pixel_shuffle(up, config.ds, config.df)


def safmn_forward(lr: Tensor, store: ParamStore, config: SafmnConfig) -> Tensor:
    """Super-resolve a (C, F, h, w) recording to (C, F, h*ds, w*df).

    Frames are processed as a batch of C-channel images.
    """
    if lr.ndim != 4:
        raise ConfigError(f"expected a 4D (C, F, h, w) input, got shape {lr.shape}")
    if lr.shape[0] != config.input_channels:
        raise ConfigError(
            f"input has {lr.shape[0]} channels but the model is configured "
            f"for {config.input_channels}"
        )
    frames = ops.moveaxis(lr, 0, 1)  # (F, C, h, w)
    out = _image_forward(frames, store, config)
    return ops.moveaxis(out, 1, 0)


def recursive_forward(lr: Tensor, store: ParamStore, config: SafmnConfig, applications: int) -> Tensor:
    """Apply one x2 model ``applications`` times with shared weights."""
    if config.ds != 2 or config.df != 2:
        raise ConfigError(
            f"recursive application requires a x2 model, got ds={config.ds}, df={config.df}"
        )
    if applications not in (1, 2, 3):
        raise ValueError(f"applications must be 1, 2 or 3, got {applications}")
    out = lr
    for _ in range(applications):
        out = safmn_forward(out, store, config)
    return out
