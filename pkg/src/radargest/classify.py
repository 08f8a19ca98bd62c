"""Range-Doppler transform and the CNN + TCN gesture classifier.

The classifier consumes per-frame range-Doppler magnitude maps: each
frame's complex samples are transformed by an unnormalized DFT along
the slow-time (pulse) axis and reduced to magnitudes.  Both steps are
differentiable, so a joint loss can push gradients through the maps
back into the super-resolution network.

The network itself runs a small two-stage CNN on every frame (3x3 conv,
GELU, 2x2 max pool, twice), global-average-pools to a feature vector,
projects it to the temporal width, applies causal dilated convolutions
over the frame sequence with residual connections, and classifies the
final time step with a two-layer head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .params import ParamStore
from .tensor import Tensor, ops

__all__ = [
    "ClassifierConfig",
    "build_classifier",
    "to_range_doppler",
    "classify",
    "predict",
]


@dataclass(frozen=True)
class ClassifierConfig:
    """Widths and depths of the classifier network."""

    num_classes: int = 12
    cnn_channels: tuple[int, int] = (8, 16)
    tcn_channels: int = 32
    tcn_kernel: int = 3
    tcn_dilations: tuple[int, ...] = (1, 2, 4)
    hidden: int = 64

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if len(self.cnn_channels) != 2 or min(self.cnn_channels) < 1:
            raise ConfigError(f"cnn_channels must be two positive widths, got {self.cnn_channels}")
        if self.tcn_channels < 1 or self.tcn_kernel < 1 or self.hidden < 1:
            raise ConfigError("tcn_channels, tcn_kernel and hidden must all be >= 1")
        dil = self.tcn_dilations
        if not dil or any(d < 1 or (d & (d - 1)) for d in dil) or list(dil) != sorted(set(dil)):
            raise ConfigError(
                f"tcn_dilations must be strictly increasing powers of 2, got {dil}"
            )


def build_classifier(config: ClassifierConfig, rng_seed: int = 0) -> ParamStore:
    """Create and initialize classifier parameters, deterministic in seed."""
    rng = np.random.default_rng(rng_seed)
    store = ParamStore()
    c0, c1 = config.cnn_channels
    store.uniform("cnn0.w", (c0, 1, 3, 3), 9, rng)
    store.uniform("cnn0.b", (c0,), 9, rng)
    store.uniform("cnn1.w", (c1, c0, 3, 3), c0 * 9, rng)
    store.uniform("cnn1.b", (c1,), c0 * 9, rng)
    store.uniform("proj.w", (config.tcn_channels, c1), c1, rng)
    store.uniform("proj.b", (config.tcn_channels,), c1, rng)
    t = config.tcn_channels
    for i in range(len(config.tcn_dilations)):
        fan = t * config.tcn_kernel
        store.uniform(f"tcn{i}.w", (t, t, config.tcn_kernel), fan, rng)
        store.uniform(f"tcn{i}.b", (t,), fan, rng)
    store.uniform("head.hidden.w", (config.hidden, t), t, rng)
    store.uniform("head.hidden.b", (config.hidden,), t, rng)
    store.uniform("head.out.w", (config.num_classes, config.hidden), config.hidden, rng)
    store.uniform("head.out.b", (config.num_classes,), config.hidden, rng)
    return store


def to_range_doppler(sr: Tensor) -> Tensor:
    """Per-frame slow-time DFT magnitudes of a (2, F, M, N) recording.

    Channel 0 is the real part, channel 1 the imaginary part.  Returns
    an (F, M, N) tensor of magnitudes in raw DFT bin order (no centering
    shift); sqrt is smoothed with a 1e-12 epsilon so gradients exist at
    exact zeros.
    """
    if sr.ndim != 4 or sr.shape[0] != 2:
        raise ValueError(f"expected a (2, F, M, N) tensor, got shape {sr.shape}")
    re = ops.take_index(sr, 0, axis=0)
    im = ops.take_index(sr, 1, axis=0)
    out_re, out_im = ops.dft_along(re, im, axis=-2)
    return ops.magnitude(out_re, out_im)


def _pool_half(x: Tensor) -> Tensor:
    h, w = x.shape[-2], x.shape[-1]
    if h < 2 or w < 2:
        raise ConfigError(f"spatial dims ({h},{w}) too small for 2x2 pooling")
    return ops.adaptive_max_pool2d(x, h // 2, w // 2)


def classify(maps: Tensor, store: ParamStore, config: ClassifierConfig) -> Tensor:
    """Logits (no softmax) for an (F, M, N) range-Doppler stack."""
    if maps.ndim != 3:
        raise ValueError(f"expected (F, M, N) maps, got shape {maps.shape}")
    f, m, n = maps.shape
    if m < 4 or n < 4:
        raise ConfigError(f"map dims ({m},{n}) too small for two 2x2 pooling stages")
    x = ops.reshape(maps, (f, 1, m, n))
    x = _pool_half(ops.gelu(ops.conv2d(x, store["cnn0.w"], store["cnn0.b"], padding=1)))
    x = _pool_half(ops.gelu(ops.conv2d(x, store["cnn1.w"], store["cnn1.b"], padding=1)))
    x = ops.mean(x, axis=(2, 3))  # (F, c1) global average pool
    x = ops.linear(x, store["proj.w"], store["proj.b"])  # (F, tcn)
    x = ops.moveaxis(x, 0, 1)  # (tcn, F) for the temporal convolutions
    for i, d in enumerate(config.tcn_dilations):
        eff = max(1, min(d, f - 1)) if f > 1 else 1
        conv = ops.dilated_conv1d(x, store[f"tcn{i}.w"], store[f"tcn{i}.b"], dilation=eff)
        x = ops.add(ops.gelu(conv), x)
    last = ops.take_index(x, -1, axis=1)  # (tcn,)
    hidden = ops.gelu(ops.linear(last, store["head.hidden.w"], store["head.hidden.b"]))
    return ops.linear(hidden, store["head.out.w"], store["head.out.b"])


def predict(logits) -> int:
    """Argmax class id with lowest-index tie-break."""
    data = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    if data.size == 0:
        raise ValueError("cannot predict from empty logits")
    return int(np.argmax(data))
