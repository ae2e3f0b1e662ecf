"""Discrete Fourier transforms along the trailing axes.

Power-of-two lengths use an iterative radix-2 decimation-in-time transform,
vectorised over all leading axes. Other lengths go through Bluestein's chirp
z-transform, which reduces them to power-of-two convolutions.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@lru_cache(maxsize=64)
def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=256)
def _twiddles(m: int, inverse: bool) -> np.ndarray:
    sign = 1.0 if inverse else -1.0
    return np.exp(sign * 2j * np.pi * np.arange(m // 2) / m)


def _radix2(a: np.ndarray, inverse: bool) -> np.ndarray:
    n = a.shape[-1]
    lead = a.shape[:-1]
    a = a[..., _bit_reverse(n)]
    out = np.empty_like(a)
    m = 2
    while m <= n:
        half = m // 2
        blocks = a.reshape(lead + (n // m, m))
        dest = out.reshape(lead + (n // m, m))
        even = blocks[..., :half]
        odd = blocks[..., half:] * _twiddles(m, inverse)
        np.add(even, odd, out=dest[..., :half])
        np.subtract(even, odd, out=dest[..., half:])
        a, out = out, a
        m *= 2
    return a


@lru_cache(maxsize=64)
def _chirp(n: int, inverse: bool) -> tuple[np.ndarray, np.ndarray, int]:
    k = np.arange(n)
    sign = 1.0 if inverse else -1.0
    # k^2 mod 2n keeps the phase argument small and exact
    w = np.exp(sign * 1j * np.pi * ((k * k) % (2 * n)) / n)
    m = 1 << (2 * n - 2).bit_length()
    b = np.zeros(m, dtype=np.complex128)
    b[:n] = np.conj(w)
    b[m - n + 1 :] = np.conj(w[1:])[::-1]
    return w, _radix2(b, inverse=False), m


def _bluestein(a: np.ndarray, inverse: bool) -> np.ndarray:
    n = a.shape[-1]
    w, fb, m = _chirp(n, inverse)
    padded = np.zeros(a.shape[:-1] + (m,), dtype=np.complex128)
    padded[..., :n] = a * w
    conv = _radix2(_radix2(padded, inverse=False) * fb, inverse=True) / m
    return conv[..., :n] * w


def fft(x: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Unnormalised DFT of the last axis (the inverse is scaled by 1/n)."""
    a = np.asarray(x, dtype=np.complex128)
    n = a.shape[-1]
    if n == 1:
        out = a.copy()
    elif _is_pow2(n):
        out = _radix2(a, inverse)
    else:
        out = _bluestein(a, inverse)
    return out / n if inverse else out


def fft2(x: np.ndarray, inverse: bool = False) -> np.ndarray:
    """2-D DFT over the last two axes."""
    a = fft(x, inverse)
    return np.swapaxes(fft(np.swapaxes(a, -1, -2), inverse), -1, -2)


def ifft2(x: np.ndarray) -> np.ndarray:
    return fft2(x, inverse=True)
