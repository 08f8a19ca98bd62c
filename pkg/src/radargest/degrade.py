"""Low-resolution degradation and pre-processing of radar cubes.

High-resolution recordings are decimated along slow time (pulse axis)
and fast time (range axis), perturbed with complex Gaussian noise
relative to the cube's RMS level, min-max normalized into [0, 1], and
split into a two-channel real representation for the networks.  The
module also provides the Catmull-Rom cubic upsampler used as the
non-learned interpolation baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simulate import ComplexCube

__all__ = [
    "DegradeSpec",
    "NormTransform",
    "downsample",
    "add_complex_noise",
    "normalize01",
    "complex_to_channels",
    "channels_to_complex",
    "cubic_upsample",
]


@dataclass(frozen=True)
class DegradeSpec:
    """Down-sampling factors and relative noise level for LR generation."""

    d_s: int
    d_f: int
    noise_sigma_rel: float = 0.01

    def __post_init__(self) -> None:
        if self.d_s < 1 or self.d_f < 1:
            raise ValueError(f"down-sampling factors must be >= 1, got ({self.d_s}, {self.d_f})")
        if self.noise_sigma_rel < 0:
            raise ValueError(f"noise_sigma_rel must be >= 0, got {self.noise_sigma_rel}")


@dataclass(frozen=True)
class NormTransform:
    """Affine map (x - offset) / scale taking a recording into [0, 1]."""

    offset: float
    scale: float

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def apply(self, x: np.ndarray) -> np.ndarray:
        if np.iscomplexobj(x):
            shift = self.offset * (1 + 1j)
        else:
            shift = self.offset
        return (x - shift) / self.scale

    def invert(self, y: np.ndarray) -> np.ndarray:
        if np.iscomplexobj(y):
            shift = self.offset * (1 + 1j)
        else:
            shift = self.offset
        return y * self.scale + shift


def downsample(cube: ComplexCube, spec: DegradeSpec) -> ComplexCube:
    """Strided decimation keeping indices 0, d, 2d, ...; remainder dropped.

    (K, M, N) becomes (K, floor(M/d_s), floor(N/d_f)).
    """
    k, m, n = cube.shape
    if spec.d_s > m or spec.d_f > n:
        raise ValueError(
            f"down-sampling factors ({spec.d_s}, {spec.d_f}) exceed axis lengths ({m}, {n})"
        )
    ms = (m // spec.d_s) * spec.d_s
    ns = (n // spec.d_f) * spec.d_f
    return ComplexCube(cube.data[:, :ms : spec.d_s, :ns : spec.d_f].copy())


def add_complex_noise(cube: ComplexCube, sigma_rel: float, rng: np.random.Generator) -> ComplexCube:
    """Add independent Gaussian noise to both components.

    Each component's standard deviation is sigma_rel times the cube's
    RMS magnitude, so an all-zero cube stays exactly zero.
    """
    if sigma_rel < 0:
        raise ValueError(f"sigma_rel must be >= 0, got {sigma_rel}")
    if sigma_rel == 0:
        return ComplexCube(cube.data.copy())
    rms = float(np.sqrt(np.mean(np.abs(cube.data) ** 2)))
    if rms == 0.0:
        return ComplexCube(cube.data.copy())
    std = sigma_rel * rms
    noise = std * (rng.standard_normal(cube.shape) + 1j * rng.standard_normal(cube.shape))
    return ComplexCube(cube.data + noise)


def normalize01(cube: ComplexCube) -> tuple[ComplexCube, NormTransform]:
    """Min-max normalize over the union of real and imaginary values.

    A constant recording (max == min) maps to all 0.5 via offset
    min - 0.5 with unit scale.
    """
    lo = min(cube.data.real.min(), cube.data.imag.min())
    hi = max(cube.data.real.max(), cube.data.imag.max())
    if hi > lo:
        tf = NormTransform(offset=float(lo), scale=float(hi - lo))
    else:
        tf = NormTransform(offset=float(lo) - 0.5, scale=1.0)
    return ComplexCube(tf.apply(cube.data)), tf


def complex_to_channels(cube: ComplexCube) -> np.ndarray:
    """Stack (real, imaginary) into a leading channel axis: (2, K, M, N)."""
    return np.stack([cube.data.real, cube.data.imag]).astype(np.float64)


def channels_to_complex(arr: np.ndarray) -> ComplexCube:
    """Exact inverse of :func:`complex_to_channels`."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 4 or arr.shape[0] != 2:
        raise ValueError(f"expected a (2, K, M, N) array, got shape {arr.shape}")
    return ComplexCube(arr[0] + 1j * arr[1])


def _catmull_rom_weights(t: np.ndarray) -> np.ndarray:
    """Catmull-Rom kernel weights for the four neighbors at fraction t."""
    t2, t3 = t * t, t * t * t
    return np.stack(
        [
            -0.5 * t3 + t2 - 0.5 * t,
            1.5 * t3 - 2.5 * t2 + 1.0,
            -1.5 * t3 + 2.0 * t2 + 0.5 * t,
            0.5 * t3 - 0.5 * t2,
        ]
    )


def _cubic_axis(arr: np.ndarray, factor: int, axis: int) -> np.ndarray:
    """Catmull-Rom interpolation along one axis, edge-clamped.

    Output position i samples source coordinate i/factor, so original
    samples land exactly on output indices 0, factor, 2*factor, ...
    """
    if factor == 1:
        return arr
    moved = np.moveaxis(arr, axis, -1)
    length = moved.shape[-1]
    if length < 2:
        raise ValueError(f"cubic interpolation needs an axis of length >= 2, got {length}")
    coords = np.arange(length * factor) / factor
    base = np.floor(coords).astype(np.int64)
    frac = coords - base
    neighbors = np.clip(np.stack([base - 1, base, base + 1, base + 2]), 0, length - 1)
    weights = _catmull_rom_weights(frac)
    gathered = moved[..., neighbors]  # (..., 4, out_len)
    out = (gathered * weights).sum(axis=-2)
    return np.moveaxis(out, -1, axis)


def cubic_upsample(cube: ComplexCube, d_s: int, d_f: int) -> ComplexCube:
    """Separable Catmull-Rom upsampling of each frame by (d_s, d_f)."""
    if d_s < 1 or d_f < 1:
        raise ValueError(f"upsampling factors must be >= 1, got ({d_s}, {d_f})")
    out = _cubic_axis(cube.data, d_s, axis=1)
    out = _cubic_axis(out, d_f, axis=2)
    return ComplexCube(out)
