"""Exploration noise: white Gaussian, power-law colored, and Ornstein-Uhlenbeck.

Every generator owns its ``numpy.random.Generator`` and emits actions clipped
to [-1, 1].
"""
from __future__ import annotations

from dataclasses import dataclass

import colorednoise
import numpy as np
from scipy.signal import lfilter


def white_sample(sigma: float, dims: int, rng: np.random.Generator) -> np.ndarray:
    return np.clip(sigma * rng.standard_normal(dims), -1.0, 1.0)


class WhiteNoise:
    def __init__(self, dims: int, sigma: float, rng: np.random.Generator):
        if sigma < 0:
            raise ValueError("sigma must be non-negative")
        self.dims, self.sigma, self.rng = dims, sigma, rng

    def reset(self) -> None:
        pass

    def __call__(self, obs=None) -> np.ndarray:
        return white_sample(self.sigma, self.dims, self.rng)


@dataclass(frozen=True)
class OUParams:
    theta: float = 0.1
    sigma: float = 0.07
    mu: float = 0.0
    x0: float = 0.0

    def __post_init__(self):
        if self.theta < 0 or self.sigma < 0:
            raise ValueError("theta and sigma must be non-negative")


def ou_step(x: np.ndarray, params: OUParams, rng: np.random.Generator) -> np.ndarray:
    """Unclipped next state of the process (the time step is folded into theta)."""
    x = np.asarray(x, dtype=float)
    return x + params.theta * (params.mu - x) + params.sigma * rng.standard_normal(x.shape)


def ou_sequence(params: OUParams, length: int, rng: np.random.Generator, dims: int = 1) -> np.ndarray:
    """``(length, dims)`` unclipped OU states, the vectorized equivalent of ``length`` calls to ``ou_step``."""
    keep = 1.0 - params.theta
    drive = params.theta * params.mu + params.sigma * rng.standard_normal((length, dims))
    zi = np.full((1, dims), keep * params.x0)
    return lfilter([1.0], [1.0, -keep], drive, axis=0, zi=zi)[0]


def autocorrelation(x, max_lag: int) -> np.ndarray:
    """Sample autocorrelation at lags ``0..max_lag`` (FFT based, biased estimator)."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    spec = np.fft.rfft(x, 2 * len(x))
    r = np.fft.irfft(spec * np.conj(spec))[: max_lag + 1]
    return r / r[0]


class OUNoise:
    """OU process whose internal state stays unclipped; only emitted actions are clipped."""

    def __init__(self, dims: int, params: OUParams, rng: np.random.Generator):
        self.dims, self.params, self.rng = dims, params, rng
        self.reset()

    def reset(self) -> None:
        self.x = np.full(self.dims, self.params.x0, dtype=float)

    def __call__(self, obs=None) -> np.ndarray:
        self.x = ou_step(self.x, self.params, self.rng)
        return np.clip(self.x, -1.0, 1.0)


@dataclass(frozen=True)
class ColoredNoiseParams:
    beta: float = 1.0
    sigma: float = 1.0
    horizon: int = 1000

    def __post_init__(self):
        if self.beta < 0 or self.sigma < 0:
            raise ValueError("beta and sigma must be non-negative")
        if self.horizon < 2:
            raise ValueError("horizon must be >= 2")


def powerlaw_psd_gaussian(beta: float, shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Unit-variance Gaussian noise with PSD ~ 1/f**beta along the last axis."""
    return colorednoise.powerlaw_psd_gaussian(beta, shape, random_state=rng)


def colored_sequence(params: ColoredNoiseParams, dims: int, rng: np.random.Generator) -> np.ndarray:
    """A ``(horizon, dims)`` block of clipped colored noise."""
    x = powerlaw_psd_gaussian(params.beta, (dims, params.horizon), rng)
    return np.clip(params.sigma * x.T, -1.0, 1.0)


class ColoredNoise:
    """Streams colored noise, synthesizing a new block whenever one runs out."""

    def __init__(self, dims: int, params: ColoredNoiseParams, rng: np.random.Generator):
        self.dims, self.params, self.rng = dims, params, rng
        self.reset()

    def reset(self) -> None:
        self._block = colored_sequence(self.params, self.dims, self.rng)
        self._i = 0

    def __call__(self, obs=None) -> np.ndarray:
        if self._i >= len(self._block):
            self.reset()
        a = self._block[self._i]
        self._i += 1
        return a


# Tuned baseline settings for a reaching arm and a running biped.
OU_PRESETS = {
    "reacher": OUParams(theta=0.004, sigma=0.02),
    "locomotion": OUParams(theta=0.1, sigma=0.07),
}
COLORED_PRESETS = {
    "reacher": ColoredNoiseParams(beta=0.04, sigma=0.1),
    "locomotion": ColoredNoiseParams(beta=0.008, sigma=0.3),
}

__all__ = [
    "COLORED_PRESETS",
    "ColoredNoise",
    "ColoredNoiseParams",
    "OUNoise",
    "OUParams",
    "OU_PRESETS",
    "WhiteNoise",
    "colored_sequence",
    "autocorrelation",
    "ou_sequence",
    "ou_step",
    "powerlaw_psd_gaussian",
    "white_sample",
]
