"""Virtual overactuation: inflate m native actions to m*n and average them back."""
from __future__ import annotations

import numpy as np


def collapse_actions(inflated, n: int) -> np.ndarray:
    """Group-wise mean: native action k is the mean of entries ``k*n .. k*n + n - 1``.

    Works on a single vector or on a ``(T, m*n)`` trajectory.
    """
    if n < 1:
        raise ValueError("action multiplier n must be >= 1")
    a = np.asarray(inflated, dtype=float)
    if a.shape[-1] % n:
        raise ValueError(f"inflated length {a.shape[-1]} is not divisible by n={n}")
    return a.reshape(*a.shape[:-1], a.shape[-1] // n, n).mean(axis=-1)


def inflate_sensors(s, n: int) -> np.ndarray:
    """Repeat each native sensor n times, matching the grouping of ``collapse_actions``."""
    if n < 1:
        raise ValueError("action multiplier n must be >= 1")
    return np.repeat(np.asarray(s, dtype=float), n, axis=-1)


def predicted_effective_variance(var: float, n: int, mean_corr: float = 0.0) -> float:
    """Variance of the mean of n actuators with equal variance and mean pairwise correlation."""
    if var < 0:
        raise ValueError("variance must be non-negative")
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 1 and not -1.0 / (n - 1) - 1e-12 <= mean_corr <= 1.0 + 1e-12:
        raise ValueError(f"mean correlation {mean_corr} infeasible for n={n}")
    return var / n + (1.0 - 1.0 / n) * mean_corr * var


__all__ = ["collapse_actions", "inflate_sensors", "predicted_effective_variance"]
