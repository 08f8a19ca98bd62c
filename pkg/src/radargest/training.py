"""Losses, the Adam optimizer, and the training/evaluation loops.

Five regimes share one dataset pipeline (degrade -> normalize -> batch):

- ``cubic``:      cubic upsampling straight into the classifier; only the
                  classifier trains, with cross-entropy.
- ``frozen-sr``:  stage 1 fits the SR network alone with L1; stage 2
                  freezes it and fits the classifier with cross-entropy.
- ``joint``:      SR network and classifier trained end to end with
                  ``gamma * L1 + cross-entropy``.
- ``multi``:      one SR network per factor in {2, 3, 4} sharing a single
                  classifier; every batch draws one factor uniformly, so
                  an epoch runs three passes over the training split.
- ``recursive``:  a single x2 SR network applied log2(d) times for
                  d in {2, 4, 8}, sharing one classifier; batches draw d
                  uniformly, three passes per epoch as above.

All loops are single-threaded and fully deterministic in the configured
seed: the split, the per-record degradation noise, parameter
initialization, batch order, factor draws, and mask draws each use their
own derived RNG stream.  Parameters are quantized through float32 at
every epoch end, so any epoch's metrics row is exactly reproducible from
a saved (float32) checkpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classify import ClassifierConfig, build_classifier, classify, predict, to_range_doppler
from .degrade import (
    DegradeSpec,
    add_complex_noise,
    channels_to_complex,
    complex_to_channels,
    cubic_upsample,
    downsample,
    normalize01,
)
from .errors import ConfigError
from .metrics import ms_ssim, psnr
from .params import ParamStore
from .simulate import ComplexCube
from .sr import SafmnConfig, build_safmn, recursive_forward, safmn_forward
from .tensor import Tensor, backward, no_grad, ops
from .tensor.autodiff import record

REGIMES = ("cubic", "frozen-sr", "joint", "multi", "recursive")
MULTI_FACTORS = (2, 3, 4)
RECURSIVE_FACTORS = (2, 4, 8)
_RECURSIVE_APPLICATIONS = {2: 1, 4: 2, 8: 3}

# Derived-seed stream tags, so independent random decisions never share
# an RNG stream.
_SPLIT_STREAM = 1
_NOISE_STREAM = 2
_TRAIN_STREAM = 3
_SR_BUILD_STREAM = 4
_CLS_BUILD_STREAM = 5


# ---------------------------------------------------------------------------
# Configuration types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LossSpec:
    """Weight of the L1 reconstruction term in the combined loss."""

    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.gamma) or self.gamma < 0:
            raise ConfigError(f"gamma must be finite and >= 0, got {self.gamma}")


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run needs beyond the dataset itself."""

    regime: str = "joint"
    epochs: int = 30
    batch_size: int = 16
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    rng_seed: int = 0
    gamma: float = 1.0
    d_s: int = 2
    d_f: int = 2
    noise_sigma_rel: float = 0.01
    mask_ratio: float = 0.0  # percent of LR patches zeroed during training
    mask_patch: int = 4

    def __post_init__(self) -> None:
        if self.regime not in REGIMES:
            raise ConfigError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must be in (0, 1), got {value}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if self.rng_seed < 0:
            raise ConfigError(f"rng_seed must be >= 0, got {self.rng_seed}")
        LossSpec(self.gamma)
        if self.d_s < 1 or self.d_f < 1:
            raise ConfigError(f"down-sampling factors must be >= 1, got ({self.d_s}, {self.d_f})")
        if not 0.0 <= self.mask_ratio < 100.0:
            raise ConfigError(f"mask_ratio must be in [0, 100), got {self.mask_ratio}")
        if self.mask_patch < 1:
            raise ConfigError(f"mask_patch must be >= 1, got {self.mask_patch}")
        if self.noise_sigma_rel < 0:
            raise ConfigError(f"noise_sigma_rel must be >= 0, got {self.noise_sigma_rel}")
        if self.regime == "recursive" and (
            self.d_s != self.d_f or self.d_s not in RECURSIVE_FACTORS
        ):
            raise ConfigError(
                f"recursive regime supports d in {RECURSIVE_FACTORS}, got ({self.d_s}, {self.d_f})"
            )
        if self.regime == "multi" and (self.d_s != self.d_f or self.d_s not in MULTI_FACTORS):
            raise ConfigError(
                f"multi regime supports d in {MULTI_FACTORS}, got ({self.d_s}, {self.d_f})"
            )


@dataclass(frozen=True)
class MetricsRecord:
    """One evaluation row: classification plus reconstruction quality."""

    epoch: int
    regime: str
    d: int
    gamma: float
    accuracy: float
    l1: float
    ms_ssim: float
    psnr: float  # +inf when the reconstruction is exact
    ce_loss: float
    sr_loss: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy must be in [0, 1], got {self.accuracy}")
        if not -1.0 <= self.ms_ssim <= 1.0:
            raise ValueError(f"ms_ssim must be in [-1, 1], got {self.ms_ssim}")
        if math.isnan(self.psnr):
            raise ValueError("psnr must not be NaN")
        for name in ("l1", "ce_loss", "sr_loss", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)}")


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------


def cross_entropy(logits, labels) -> Tensor:
    """Mean negative log-likelihood of integer labels under softmax logits.

    Accepts a (C,) tensor with a single integer label or a (B, C) tensor
    with a length-B label sequence.  Stabilized by max subtraction; the
    backward pass is the analytic softmax-minus-one-hot form.
    """
    t = logits if isinstance(logits, Tensor) else Tensor(np.asarray(logits, dtype=np.float64))
    if t.ndim == 1:
        z = t.data[None, :]
        lab = np.asarray(labels, dtype=np.int64).reshape(-1)
        if lab.size != 1:
            raise ValueError(f"one logits row takes one label, got {lab.size}")
    elif t.ndim == 2:
        z = t.data
        lab = np.asarray(labels, dtype=np.int64).reshape(-1)
        if lab.size != z.shape[0]:
            raise ValueError(f"got {z.shape[0]} logit rows but {lab.size} labels")
    else:
        raise ValueError(f"logits must be (C,) or (B, C), got shape {t.shape}")
    num_classes = z.shape[1]
    if lab.min() < 0 or lab.max() >= num_classes:
        raise ValueError(f"label out of range [0, {num_classes}): {lab.tolist()}")

    shifted = z - z.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    total = expz.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(total)
    rows = np.arange(lab.size)
    out = Tensor(np.asarray(-log_probs[rows, lab].mean()))
    softmax = expz / total

    def bwd(g):
        gz = softmax.copy()
        gz[rows, lab] -= 1.0
        gz *= g / lab.size
        return (gz.reshape(t.shape),)

    return record(out, (t,), bwd)


def l1_loss(sr, hr) -> Tensor:
    """Mean absolute error; the subgradient at exact ties is zero."""
    a = sr if isinstance(sr, Tensor) else Tensor(np.asarray(sr, dtype=np.float64))
    b = hr if isinstance(hr, Tensor) else Tensor(np.asarray(hr, dtype=np.float64))
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return ops.mean(ops.abs_(ops.sub(a, b)))


def combined_loss(sr, hr, logits, labels, gamma: float) -> Tensor:
    """``gamma * l1_loss(sr, hr) + cross_entropy(logits, labels)``.

    With ``gamma == 0`` the returned graph is the pure cross-entropy
    graph: the L1 term is not built at all, so no gradient can reach the
    reconstruction except through the classifier cascade.
    """
    ce = cross_entropy(logits, labels)
    if gamma == 0.0:
        return ce
    return ops.add(ops.mul(l1_loss(sr, hr), float(gamma)), ce)


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    """First/second-moment accumulators, keyed by parameter name."""

    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(
    store: ParamStore,
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update over every parameter in ``store``.

    Parameters whose ``grad`` is ``None`` count as zero-gradient.
    """
    state.step += 1
    bc1 = 1.0 - beta1**state.step
    bc2 = 1.0 - beta2**state.step
    for name, p in store.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        else:
            v = state.v[name]
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        state.m[name] = m
        state.v[name] = v
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


# ---------------------------------------------------------------------------
# Patch masking augmentation
# ---------------------------------------------------------------------------


def patch_mask_augment(x, p: float, patch_size: int, rng: np.random.Generator) -> np.ndarray:
    """Zero a uniformly drawn p percent of non-overlapping patches.

    The patch grid tiles the last two axes (edge patches may be
    partial).  Round-half-up of p% of the patch count is drawn without
    replacement; the one mask per call is shared across all leading
    axes, so the channels and frames of a recording are masked
    consistently.  Always returns a fresh array.
    """
    data = x.data if isinstance(x, Tensor) else x
    arr = np.array(data, dtype=np.float64)
    if not 0.0 <= p < 100.0:
        raise ValueError(f"mask percentage must be in [0, 100), got {p}")
    if patch_size < 1:
        raise ValueError(f"patch size must be >= 1, got {patch_size}")
    if arr.ndim < 2:
        raise ValueError(f"need at least two dims, got shape {arr.shape}")
    h, w = arr.shape[-2], arr.shape[-1]
    grid_h = -(-h // patch_size)
    grid_w = -(-w // patch_size)
    count = int(p * grid_h * grid_w / 100.0 + 0.5)
    if count == 0:
        return arr
    for idx in rng.choice(grid_h * grid_w, size=count, replace=False):
        i, j = divmod(int(idx), grid_w)
        arr[
            ...,
            i * patch_size : (i + 1) * patch_size,
            j * patch_size : (j + 1) * patch_size,
        ] = 0.0
    return arr


# ---------------------------------------------------------------------------
# Dataset preparation
# ---------------------------------------------------------------------------


def split_dataset(num_records: int, rng_seed: int) -> tuple[list[int], list[int]]:
    """Deterministic 80/20 train/validation split of record indices."""
    if num_records < 2:
        raise ValueError(f"need at least 2 records to split, got {num_records}")
    order = np.random.default_rng([rng_seed, _SPLIT_STREAM]).permutation(num_records)
    cut = min(max(1, int(0.8 * num_records)), num_records - 1)
    return [int(i) for i in order[:cut]], [int(i) for i in order[cut:]]


@dataclass(frozen=True)
class PreparedRecord:
    """Normalized LR input and HR target channels for one recording."""

    lr: np.ndarray  # (2, K, m, n)
    hr: np.ndarray  # (2, K, m * d_s, n * d_f)
    label: int


def degrade_record(
    cube: ComplexCube,
    index: int,
    d_s: int,
    d_f: int,
    noise_sigma_rel: float,
    rng_seed: int,
) -> ComplexCube:
    """Downsample one recording and add its index-keyed noise draw.

    The noise is seeded by (rng_seed, index, d_s, d_f), so a record
    degrades identically regardless of epoch, batch order, or which
    split it lands in.
    """
    lr_cube = downsample(cube, DegradeSpec(d_s=d_s, d_f=d_f, noise_sigma_rel=noise_sigma_rel))
    rng = np.random.default_rng([rng_seed, _NOISE_STREAM, index, d_s, d_f])
    return add_complex_noise(lr_cube, noise_sigma_rel, rng)


def prepare_record(
    cube: ComplexCube,
    label: int,
    index: int,
    d_s: int,
    d_f: int,
    noise_sigma_rel: float,
    rng_seed: int,
    lr_cube: ComplexCube | None = None,
) -> PreparedRecord:
    """Degrade and normalize one recording into an LR/HR training pair.

    When ``lr_cube`` is given it replaces the internal downsample+noise
    step (its shape must match the floor rule); otherwise the LR input
    comes from :func:`degrade_record`.  LR and HR are min-max normalized
    independently; the HR target is cropped to the shape the upsampler
    can restore (floor rule), measured from the LR dims.
    """
    if lr_cube is None:
        lr_cube = degrade_record(cube, index, d_s, d_f, noise_sigma_rel, rng_seed)
    else:
        k, m_full, n_full = cube.shape
        want = (k, m_full // d_s, n_full // d_f)
        if lr_cube.shape != want:
            raise ValueError(
                f"provided LR cube has shape {lr_cube.shape}, expected {want} "
                f"for factors ({d_s}, {d_f})"
            )
    lr_norm, _ = normalize01(lr_cube)
    hr_norm, _ = normalize01(cube)
    lr = complex_to_channels(lr_norm)
    hr = complex_to_channels(hr_norm)
    m, n = lr.shape[2], lr.shape[3]
    return PreparedRecord(
        lr=lr,
        hr=np.ascontiguousarray(hr[:, :, : m * d_s, : n * d_f]),
        label=int(label),
    )


# ---------------------------------------------------------------------------
# Model bundles
# ---------------------------------------------------------------------------


@dataclass
class ModelBundle:
    """Parameter stores for one model family, plus the shaping configs.

    ``sr_stores`` is keyed ``"sr"`` for the single-network regimes and
    ``"sr_x{d}"`` for the multi-factor regime; cubic has no SR entries.
    """

    regime: str
    classifier_config: ClassifierConfig
    classifier: ParamStore
    sr_configs: dict = field(default_factory=dict)
    sr_stores: dict = field(default_factory=dict)

    def all_stores(self) -> dict[str, ParamStore]:
        out = {"classifier": self.classifier}
        out.update(self.sr_stores)
        return out


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def build_bundle(
    config: TrainConfig,
    classifier_config: ClassifierConfig,
    sr_template: SafmnConfig | None = None,
) -> ModelBundle:
    """Fresh, seeded parameter stores for a regime.

    ``sr_template`` supplies the SR network's width/depth/bias; its
    up-sampling factors are overridden per regime.
    """
    template = sr_template if sr_template is not None else SafmnConfig()
    if template.input_channels != 2:
        raise ConfigError(
            f"SR template must take 2 input channels (real/imag), got {template.input_channels}"
        )

    def sr_cfg(ds: int, df: int) -> SafmnConfig:
        return SafmnConfig(
            base_channels=template.base_channels,
            num_fmm_blocks=template.num_fmm_blocks,
            ds=ds,
            df=df,
            input_channels=template.input_channels,
            use_bias=template.use_bias,
        )

    sr_configs: dict[str, SafmnConfig] = {}
    if config.regime in ("joint", "frozen-sr"):
        sr_configs["sr"] = sr_cfg(config.d_s, config.d_f)
    elif config.regime == "recursive":
        sr_configs["sr"] = sr_cfg(2, 2)
    elif config.regime == "multi":
        for factor in MULTI_FACTORS:
            sr_configs[f"sr_x{factor}"] = sr_cfg(factor, factor)

    sr_stores = {
        key: build_safmn(cfg, rng_seed=_derive_seed(config.rng_seed, _SR_BUILD_STREAM, i))
        for i, (key, cfg) in enumerate(sorted(sr_configs.items()))
    }
    classifier = build_classifier(
        classifier_config, rng_seed=_derive_seed(config.rng_seed, _CLS_BUILD_STREAM)
    )
    return ModelBundle(
        regime=config.regime,
        classifier_config=classifier_config,
        classifier=classifier,
        sr_configs=sr_configs,
        sr_stores=sr_stores,
    )


def bundle_state_dict(bundle: ModelBundle) -> dict[str, np.ndarray]:
    """Flatten every store into ``<store>.<param>`` arrays."""
    out: dict[str, np.ndarray] = {}
    for store_key, store in sorted(bundle.all_stores().items()):
        for name, arr in store.state_dict().items():
            out[f"{store_key}.{name}"] = arr
    return out


def load_bundle_state(bundle: ModelBundle, state: dict[str, np.ndarray]) -> None:
    """Inverse of :func:`bundle_state_dict`; name sets must match exactly."""
    claimed = set()
    for store_key, store in bundle.all_stores().items():
        prefix = store_key + "."
        sub = {}
        for key, value in state.items():
            if key.startswith(prefix):
                sub[key[len(prefix) :]] = value
                claimed.add(key)
        store.load_state_dict(sub)
    extra = sorted(set(state) - claimed)
    if extra:
        raise ValueError(f"unexpected parameters in state: missing none, unexpected {extra}")


# ---------------------------------------------------------------------------
# Forward dispatch
# ---------------------------------------------------------------------------


def _cubic_channels(lr: np.ndarray, d_s: int, d_f: int) -> np.ndarray:
    return complex_to_channels(cubic_upsample(channels_to_complex(lr), d_s, d_f))


def reconstruct(bundle: ModelBundle, lr: np.ndarray, d_s: int, d_f: int) -> Tensor:
    """Regime-dispatched LR -> HR-estimate forward pass.

    Graph-recorded for the learned regimes; the cubic path is a plain
    constant tensor.
    """
    x = Tensor(lr)
    if bundle.regime == "cubic":
        return Tensor(_cubic_channels(lr, d_s, d_f))
    if bundle.regime == "recursive":
        if d_s != d_f or d_s not in _RECURSIVE_APPLICATIONS:
            raise ConfigError(
                f"recursive regime supports d in {RECURSIVE_FACTORS}, got ({d_s}, {d_f})"
            )
        return recursive_forward(
            x, bundle.sr_stores["sr"], bundle.sr_configs["sr"], _RECURSIVE_APPLICATIONS[d_s]
        )
    if bundle.regime == "multi":
        key = f"sr_x{d_s}"
        if d_s != d_f or key not in bundle.sr_stores:
            raise ConfigError(
                f"no SR network for factor ({d_s}, {d_f}); have {sorted(bundle.sr_stores)}"
            )
        return safmn_forward(x, bundle.sr_stores[key], bundle.sr_configs[key])
    cfg = bundle.sr_configs["sr"]
    if (cfg.ds, cfg.df) != (d_s, d_f):
        raise ConfigError(f"SR network upsamples by ({cfg.ds}, {cfg.df}), not ({d_s}, {d_f})")
    return safmn_forward(x, bundle.sr_stores["sr"], cfg)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(
    bundle: ModelBundle,
    dataset: Sequence,
    config: TrainConfig,
    indices: Sequence[int] | None = None,
    epoch: int = -1,
    prepared: dict | None = None,
) -> MetricsRecord:
    """Metrics over (a subset of) a dataset at the configured factor.

    Reconstruction metrics are computed in the [0, 1]-normalized channel
    domain, per record, then averaged; the HR target's spatial dims must
    be at least 11 for MS-SSIM.  ``prepared`` optionally maps record
    index to a :class:`PreparedRecord` at (d_s, d_f) to skip
    recomputing degradations.
    """
    records = list(dataset)
    idx = list(range(len(records))) if indices is None else [int(i) for i in indices]
    if not idx:
        raise ValueError("cannot evaluate an empty dataset")
    hits = 0
    l1_vals, ms_vals, psnr_vals, ce_vals = [], [], [], []
    with no_grad():
        for i in idx:
            rec = prepared.get(i) if prepared is not None else None
            if rec is None:
                cube, label = records[i]
                rec = prepare_record(
                    cube, label, i, config.d_s, config.d_f, config.noise_sigma_rel, config.rng_seed
                )
            sr_t = reconstruct(bundle, rec.lr, config.d_s, config.d_f)
            maps = to_range_doppler(sr_t)
            logits = classify(maps, bundle.classifier, bundle.classifier_config)
            hits += int(predict(logits) == rec.label)
            ce_vals.append(cross_entropy(logits, rec.label).item())
            l1_vals.append(float(np.abs(sr_t.data - rec.hr).mean()))
            psnr_vals.append(psnr(sr_t.data, rec.hr))
            ms_vals.append(ms_ssim(sr_t.data, rec.hr))
    l1_mean = float(np.mean(l1_vals))
    return MetricsRecord(
        epoch=epoch,
        regime=config.regime,
        d=config.d_s,
        gamma=config.gamma,
        accuracy=hits / len(idx),
        l1=l1_mean,
        ms_ssim=float(np.mean(ms_vals)),
        psnr=float(np.mean(psnr_vals)),
        ce_loss=float(np.mean(ce_vals)),
        sr_loss=l1_mean,
    )


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainResult:
    """Trained stores plus the per-epoch metrics and per-step loss trace."""

    bundle: ModelBundle
    config: TrainConfig
    history: list
    step_losses: list
    steps_per_epoch: int
    train_indices: list
    val_indices: list


def _mean_of(losses: list[Tensor]) -> Tensor:
    total = losses[0]
    for item in losses[1:]:
        total = ops.add(total, item)
    return ops.mul(total, 1.0 / len(losses))


def _train_step(
    bundle: ModelBundle,
    config: TrainConfig,
    mode: str,
    prepared_map: dict,
    batch: Sequence[int],
    d_s: int,
    d_f: int,
    states: dict,
    rng: np.random.Generator,
) -> float:
    """One optimizer step over a batch; returns the driving loss value."""
    losses = []
    for i in batch:
        rec = prepared_map[int(i)]
        lr_in = rec.lr
        if config.mask_ratio > 0.0:
            lr_in = patch_mask_augment(lr_in, config.mask_ratio, config.mask_patch, rng)
        if mode == "sr":
            losses.append(l1_loss(reconstruct(bundle, lr_in, d_s, d_f), Tensor(rec.hr)))
            continue
        if mode == "cls":
            # classifier-only: the reconstruction is a detached constant
            with no_grad():
                sr_t = reconstruct(bundle, lr_in, d_s, d_f)
            maps = to_range_doppler(Tensor(sr_t.data))
            logits = classify(maps, bundle.classifier, bundle.classifier_config)
            losses.append(cross_entropy(logits, rec.label))
            continue
        sr_t = reconstruct(bundle, lr_in, d_s, d_f)
        maps = to_range_doppler(sr_t)
        logits = classify(maps, bundle.classifier, bundle.classifier_config)
        losses.append(combined_loss(sr_t, Tensor(rec.hr), logits, rec.label, config.gamma))

    driving = _mean_of(losses)
    for store in bundle.all_stores().values():
        store.zero_grad()
    backward(driving)

    if mode == "sr":
        trained = ["sr"]
    elif mode == "cls":
        trained = ["classifier"]
    elif bundle.regime == "multi":
        trained = ["classifier", f"sr_x{d_s}"]
    else:
        trained = ["classifier", "sr"]
    stores = bundle.all_stores()
    for key in trained:
        adam_step(
            stores[key],
            states[key],
            lr=config.learning_rate,
            beta1=config.beta1,
            beta2=config.beta2,
            eps=config.eps,
        )
    return float(driving.data)


def train_regime(
    dataset: Sequence,
    config: TrainConfig,
    sr_template: SafmnConfig | None = None,
    classifier_config: ClassifierConfig | None = None,
    lr_records: Sequence | None = None,
) -> TrainResult:
    """Train one regime on (cube, label) records and track validation metrics.

    The dataset is split 80/20 by the configured seed.  ``frozen-sr``
    runs ``config.epochs`` SR-only epochs followed by the same number of
    classifier-only epochs, so its history is twice as long.  The
    multi-factor regimes run three shuffled passes per epoch with the
    factor drawn uniformly per batch.  Every epoch ends by quantizing
    the parameters through float32 and evaluating the validation split
    at (d_s, d_f), which makes each history row reproducible from a
    float32 checkpoint of that epoch.

    ``lr_records`` optionally supplies pre-degraded LR cubes (one per
    record, in dataset order) used for the configured (d_s, d_f); any
    other factors a multi-factor regime needs are still degraded on the
    fly.
    """
    records = list(dataset)
    labels = [int(label) for _, label in records]
    if not labels:
        raise ValueError("cannot train on an empty dataset")
    if lr_records is not None and len(lr_records) != len(records):
        raise ValueError(
            f"lr_records has {len(lr_records)} entries for {len(records)} records"
        )
    num_classes = max(labels) + 1
    if classifier_config is None:
        classifier_config = ClassifierConfig(num_classes=num_classes)
    elif classifier_config.num_classes < num_classes:
        raise ConfigError(
            f"classifier covers {classifier_config.num_classes} classes "
            f"but the dataset has labels up to {num_classes - 1}"
        )

    train_idx, val_idx = split_dataset(len(records), config.rng_seed)
    bundle = build_bundle(config, classifier_config, sr_template)

    if config.regime == "multi":
        factors = [(f, f) for f in MULTI_FACTORS]
    elif config.regime == "recursive":
        factors = [(f, f) for f in RECURSIVE_FACTORS]
    else:
        factors = [(config.d_s, config.d_f)]

    prepared: dict[tuple[int, int], dict[int, PreparedRecord]] = {}
    for d_s, d_f in set(factors) | {(config.d_s, config.d_f)}:
        external = lr_records is not None and (d_s, d_f) == (config.d_s, config.d_f)
        prepared[(d_s, d_f)] = {
            i: prepare_record(
                records[i][0],
                records[i][1],
                i,
                d_s,
                d_f,
                config.noise_sigma_rel,
                config.rng_seed,
                lr_cube=lr_records[i] if external else None,
            )
            for i in range(len(records))
        }

    if config.regime == "frozen-sr":
        stages = [("sr", config.epochs), ("cls", config.epochs)]
    elif config.regime == "cubic":
        stages = [("cls", config.epochs)]
    else:
        stages = [("joint", config.epochs)]

    states = {key: AdamState() for key in bundle.all_stores()}
    rng = np.random.default_rng([config.rng_seed, _TRAIN_STREAM])
    steps_per_epoch = len(factors) * -(-len(train_idx) // config.batch_size)
    step_losses: list[float] = []
    history: list[MetricsRecord] = []
    epoch_counter = 0

    for mode, stage_epochs in stages:
        for _ in range(stage_epochs):
            for _pass in range(len(factors)):
                order = rng.permutation(np.asarray(train_idx, dtype=np.int64))
                for start in range(0, len(order), config.batch_size):
                    batch = order[start : start + config.batch_size]
                    if len(factors) > 1:
                        d_s, d_f = factors[int(rng.integers(len(factors)))]
                    else:
                        d_s, d_f = factors[0]
                    step_losses.append(
                        _train_step(
                            bundle, config, mode, prepared[(d_s, d_f)], batch, d_s, d_f, states, rng
                        )
                    )
            for store in bundle.all_stores().values():
                store.round_to_float32()
            history.append(
                evaluate(
                    bundle,
                    records,
                    config,
                    indices=val_idx,
                    epoch=epoch_counter,
                    prepared=prepared[(config.d_s, config.d_f)],
                )
            )
            epoch_counter += 1

    return TrainResult(
        bundle=bundle,
        config=config,
        history=history,
        step_losses=step_losses,
        steps_per_epoch=steps_per_epoch,
        train_indices=train_idx,
        val_indices=val_idx,
    )
