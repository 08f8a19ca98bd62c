"""Image-quality metrics for reconstructed radar recordings.

Both metrics operate on plain float arrays in the [0, 1]-normalized
domain and never enter the autodiff graph; they are evaluation-only.
Arrays with more than two dimensions are treated as stacks of images:
window statistics are pooled across all leading axes.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = ["ms_ssim", "psnr"]

_WINDOW_SIZE = 11
_WINDOW_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03
# Canonical five-scale weights; truncated and renormalized when the
# spatial dims cannot support all five dyadic scales.
_SCALE_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


def psnr(sr, hr, max_val: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` when the images match."""
    sr = np.asarray(sr, dtype=np.float64)
    hr = np.asarray(hr, dtype=np.float64)
    if sr.shape != hr.shape:
        raise ValueError(f"shape mismatch: {sr.shape} vs {hr.shape}")
    if max_val <= 0:
        raise ValueError(f"max_val must be positive, got {max_val}")
    mse = float(np.mean((sr - hr) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_val * max_val / mse)


def _gaussian_kernel() -> np.ndarray:
    x = np.arange(_WINDOW_SIZE) - (_WINDOW_SIZE - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * _WINDOW_SIGMA * _WINDOW_SIGMA))
    return g / g.sum()


def _blur_valid(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable valid-mode Gaussian filtering of the last two axes."""
    out = sliding_window_view(img, kernel.size, axis=-1) @ kernel
    return sliding_window_view(out, kernel.size, axis=-2) @ kernel


def _ssim_means(a: np.ndarray, b: np.ndarray, max_val: float) -> tuple[float, float]:
    """Mean luminance*cs and mean cs over every 11x11 window."""
    c1 = (_K1 * max_val) ** 2
    c2 = (_K2 * max_val) ** 2
    kernel = _gaussian_kernel()
    mu_a = _blur_valid(a, kernel)
    mu_b = _blur_valid(b, kernel)
    var_a = _blur_valid(a * a, kernel) - mu_a * mu_a
    var_b = _blur_valid(b * b, kernel) - mu_b * mu_b
    cov = _blur_valid(a * b, kernel) - mu_a * mu_b
    lum = (2.0 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1)
    cs = (2.0 * cov + c2) / (var_a + var_b + c2)
    return float(np.mean(lum * cs)), float(np.mean(cs))


def _half_pool(img: np.ndarray) -> np.ndarray:
    """2x2 mean pooling of the last two axes; odd trailing rows/cols drop."""
    h, w = img.shape[-2] // 2, img.shape[-1] // 2
    x = img[..., : 2 * h, : 2 * w]
    return x.reshape(x.shape[:-2] + (h, 2, w, 2)).mean(axis=(-3, -1))


def _scale_count(h: int, w: int) -> int:
    scales = 1
    while scales < len(_SCALE_WEIGHTS) and (min(h, w) >> scales) >= _WINDOW_SIZE:
        scales += 1
    return scales


def ms_ssim(sr, hr, max_val: float = 1.0) -> float:
    """Multi-scale structural similarity in [0, 1].

    Statistics use an 11x11 Gaussian window (sigma 1.5) in valid mode.
    Contrast-structure means are taken at every dyadic scale and the
    luminance term only at the coarsest; the number of scales is the
    largest (up to five) that keeps the coarsest image at least as big
    as the window, with the canonical weights renormalized to match.
    """
    sr = np.asarray(sr, dtype=np.float64)
    hr = np.asarray(hr, dtype=np.float64)
    if sr.shape != hr.shape:
        raise ValueError(f"shape mismatch: {sr.shape} vs {hr.shape}")
    if sr.ndim < 2:
        raise ValueError(f"need at least 2 spatial dims, got shape {sr.shape}")
    h, w = sr.shape[-2], sr.shape[-1]
    if min(h, w) < _WINDOW_SIZE:
        raise ValueError(
            f"spatial dims ({h},{w}) smaller than the {_WINDOW_SIZE}x{_WINDOW_SIZE} window"
        )
    scales = _scale_count(h, w)
    weights = np.asarray(_SCALE_WEIGHTS[:scales])
    weights = weights / weights.sum()

    a, b = sr, hr
    result = 1.0
    for s in range(scales):
        lum_cs, cs = _ssim_means(a, b, max_val)
        # final scale carries the luminance term; earlier scales only cs
        value = lum_cs if s == scales - 1 else cs
        result *= max(value, 0.0) ** weights[s]
        if s != scales - 1:
            a = _half_pool(a)
            b = _half_pool(b)
    return float(result)
