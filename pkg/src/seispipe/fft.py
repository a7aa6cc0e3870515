"""Iterative radix-2 decimation-in-time FFT, vectorised over leading axes."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


def next_pow2(n: int) -> int:
    if n < 1:
        raise ValueError("length must be positive")
    return 1 << (n - 1).bit_length()


@lru_cache(maxsize=32)
def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=64)
def _twiddles(m: int) -> np.ndarray:
    k = np.arange(m // 2)
    return np.exp(-2j * np.pi * k / m)


def fft_radix2(x) -> np.ndarray:
    """Forward DFT along the last axis; that axis must have power-of-two length."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    if n < 1 or n & (n - 1):
        raise ValueError(f"radix-2 FFT needs a power-of-two length, got {n}")
    lead = x.shape[:-1]
    a = x[..., _bit_reverse(n)]
    m = 2
    while m <= n:
        half = m // 2
        blocks = a.reshape(*lead, n // m, m)
        u = blocks[..., :half]
        v = blocks[..., half:] * _twiddles(m)
        a = np.concatenate((u + v, u - v), axis=-1).reshape(*lead, n)
        m *= 2
    return a


def rfft_magnitude(x, axis: int = -1) -> np.ndarray:
    """One-sided magnitude spectrum (P//2 + 1 bins) after zero-padding to a power of two."""
    x = np.moveaxis(np.asarray(x, dtype=np.float64), axis, -1)
    n = x.shape[-1]
    p = next_pow2(n)
    padded = np.zeros(x.shape[:-1] + (p,))
    padded[..., :n] = x
    spec = np.abs(fft_radix2(padded)[..., : p // 2 + 1])
    return np.moveaxis(spec, -1, axis)
