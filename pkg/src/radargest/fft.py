"""Discrete Fourier transform kernels used by the range-Doppler stage.

The forward transform is unnormalized:

    X[f] = sum_{k=0}^{N-1} x[k] * exp(-2j * pi * f * k / N)

Power-of-two lengths run through an iterative radix-2 Cooley-Tukey
decimation-in-time pass.  Every other length is handled by Bluestein's
chirp-z reformulation, which expresses the same sum as a circular
convolution that is then evaluated at a padded power-of-two length, so
the whole module stays O(N log N) for arbitrary N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ComplexTensor", "fft", "fft_1d"]


def _bit_reverse_permutation(n: int) -> np.ndarray:
    """Index permutation that orders inputs by bit-reversed position."""
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def _fft_pow2(x: np.ndarray) -> np.ndarray:
    """Iterative radix-2 transform along the last axis (length a power of 2)."""
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    lead = x.shape[:-1]
    y = x[..., _bit_reverse_permutation(n)]
    half = 1
    while half < n:
        tw = np.exp(-1j * np.pi * np.arange(half) / half)
        y = y.reshape(lead + (n // (2 * half), 2, half))
        even = y[..., 0, :]
        odd = y[..., 1, :] * tw
        y = np.concatenate([even + odd, even - odd], axis=-1).reshape(lead + (n,))
        half *= 2
    return y


def _ifft_pow2(x: np.ndarray) -> np.ndarray:
    """Inverse transform via the conjugation identity, power-of-2 length only."""
    n = x.shape[-1]
    return np.conj(_fft_pow2(np.conj(x))) / n


def _fft_bluestein(x: np.ndarray) -> np.ndarray:
    """Arbitrary-length transform along the last axis via chirp-z.

    With the chirp c_k = exp(-1j*pi*k^2/n), the DFT becomes
    X[f] = c_f * sum_k (x_k c_k) * conj(c_{f-k}), a circular convolution
    that is zero-padded to a power of two >= 2n-1 and evaluated there.
    The k^2 term is reduced mod 2n before the complex exponential so the
    phase stays accurate for large n.
    """
    n = x.shape[-1]
    k = np.arange(n, dtype=np.int64)
    phase = (k * k) % (2 * n)
    chirp = np.exp(-1j * np.pi * phase / n)

    m = 1 << (2 * n - 1).bit_length()
    a = np.zeros(x.shape[:-1] + (m,), dtype=np.complex128)
    a[..., :n] = x * chirp
    b = np.zeros(m, dtype=np.complex128)
    b[:n] = np.conj(chirp)
    b[m - n + 1:] = np.conj(chirp[1:][::-1])

    conv = _ifft_pow2(_fft_pow2(a) * _fft_pow2(b))
    return conv[..., :n] * chirp


def fft(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Unnormalized forward DFT of ``x`` along ``axis``.

    Accepts real or complex input of any dimensionality and returns a
    complex128 array of the same shape.
    """
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[axis]
    if n == 0:
        raise ValueError("cannot transform an empty axis")
    moved = np.moveaxis(x, axis, -1)
    if n & (n - 1) == 0:
        out = _fft_pow2(moved)
    else:
        out = _fft_bluestein(moved)
    return np.moveaxis(out, -1, axis)


@dataclass
class ComplexTensor:
    """Complex array stored as separate float64 real/imaginary planes."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self) -> None:
        self.re = np.asarray(self.re, dtype=np.float64)
        self.im = np.asarray(self.im, dtype=np.float64)
        if self.re.shape != self.im.shape:
            raise ValueError(
                f"real/imaginary shapes differ: {self.re.shape} vs {self.im.shape}"
            )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.re.shape

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "ComplexTensor":
        z = np.asarray(z, dtype=np.complex128)
        return cls(re=z.real.copy(), im=z.imag.copy())

    def to_complex(self) -> np.ndarray:
        return self.re + 1j * self.im


def fft_1d(x: ComplexTensor, axis: int = -1) -> ComplexTensor:
    """Forward DFT of a :class:`ComplexTensor` along ``axis``."""
    return ComplexTensor.from_complex(fft(x.to_complex(), axis=axis))
