from __future__ import annotations

import numpy as np
import pytest

from twinforge.planner.noise import powerlaw_noise


def _lag_correlation(noise: np.ndarray) -> float:
    return float(np.mean(noise[:, 1:] * noise[:, :-1]) / np.mean(noise * noise))


def test_white_noise_is_plain_gaussian():
    first = powerlaw_noise(0.0, (4, 10), np.random.default_rng(7))
    second = np.random.default_rng(7).standard_normal((4, 10))
    assert np.array_equal(first, second)


@pytest.mark.parametrize("steps", [10, 11])
def test_unit_variance(steps):
    noise = powerlaw_noise(2.0, (4000, steps), np.random.default_rng(0))
    assert noise.shape == (4000, steps)
    variance = noise.var(axis=0)
    assert np.all(np.abs(variance - 1.0) < 0.15)
    assert abs(noise.mean()) < 0.1


def test_red_noise_is_smooth():
    rng = np.random.default_rng(3)
    red = powerlaw_noise(2.0, (2000, 16), rng)
    white = powerlaw_noise(0.0, (2000, 16), rng)
    assert _lag_correlation(red) > 0.5
    assert abs(_lag_correlation(white)) < 0.1


def test_single_step():
    noise = powerlaw_noise(2.0, (5, 1), np.random.default_rng(0))
    assert noise.shape == (5, 1)


def test_same_seed_same_noise():
    a = powerlaw_noise(2.0, (3, 8), np.random.default_rng([1, 2, 3]))
    b = powerlaw_noise(2.0, (3, 8), np.random.default_rng([1, 2, 3]))
    assert np.array_equal(a, b)
