"""
Gaussian noise with a power-law spectrum, `PSD(f) ∝ 1/f^β`, along the time axis.

β = 0 is white noise; β = 2 (the planner default) is red noise whose samples
drift smoothly over the horizon.
"""

from __future__ import annotations

__all__ = ["powerlaw_noise"]

import typing as t

import numpy as np


def powerlaw_noise(beta: float, shape: t.Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """
    Draws zero-mean, unit-variance noise correlated along the last axis.

    Frequencies below `1/n` are raised to `1/n`, so the DC bin carries the
    same weight as the lowest non-zero frequency.

    Parameters
    ----------
    beta : float
        Spectral exponent, `>= 0`.
    shape : Sequence[int]
        Output shape; the last entry is the number of time steps.
    rng : np.random.Generator

    Returns
    -------
    ndarray
        Noise of the requested shape. Every entry has variance exactly 1.
    """
    dims = list(shape)
    n = dims[-1]
    if n <= 1 or beta == 0:
        return rng.standard_normal(dims)

    frequencies = np.fft.rfftfreq(n)
    frequencies[frequencies < 1.0 / n] = 1.0 / n
    scale = frequencies ** (-beta / 2.0)

    spectrum = dims[:-1] + [scale.shape[0]]
    real = rng.standard_normal(spectrum) * scale
    imag = rng.standard_normal(spectrum) * scale
    imag[..., 0] = 0.0
    real[..., 0] *= np.sqrt(2.0)
    last = scale.shape[0] - 1
    if n % 2 == 0:
        imag[..., -1] = 0.0
        real[..., -1] *= np.sqrt(2.0)
        power = scale[0] ** 2 + 2.0 * np.sum(scale[1:last] ** 2) + scale[last] ** 2
    else:
        power = scale[0] ** 2 + 2.0 * np.sum(scale[1:] ** 2)
    sigma = np.sqrt(2.0 * power) / n
    return np.fft.irfft(real + 1j * imag, n=n, axis=-1) / sigma
