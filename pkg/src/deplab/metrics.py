"""Exploration metrics: grid coverage, action correlation, PSD slope, histogram entropy."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class CoverageGrid:
    """Binary occupancy of an N x N grid over ``[low, high)`` per dimension.

    Cells are half-open, so a sample on an interior edge goes to the cell
    above it; samples exactly on the upper bound count as out of bounds.
    """

    n: int
    low: tuple[float, float]
    high: tuple[float, float]
    occupancy: np.ndarray = field(init=False)
    out_of_bounds: int = field(init=False, default=0)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("grid resolution must be >= 2")
        if any(a >= b for a, b in zip(self.low, self.high)):
            raise ValueError("grid bounds need low < high")
        self.occupancy = np.zeros((self.n, self.n), dtype=bool)

    def add(self, samples) -> "CoverageGrid":
        pts = np.asarray(samples, dtype=float).reshape(-1, 2)
        low = np.asarray(self.low)
        high = np.asarray(self.high)
        finite = np.all(np.isfinite(pts), axis=1)
        idx = np.full(pts.shape, -1, dtype=np.int64)
        idx[finite] = np.floor((pts[finite] - low) / (high - low) * self.n).astype(np.int64)
        inside = np.all((idx >= 0) & (idx < self.n), axis=1)
        self.out_of_bounds += int((~inside).sum())
        self.occupancy[idx[inside, 0], idx[inside, 1]] = True
        return self

    def merge(self, other: "CoverageGrid") -> "CoverageGrid":
        if (other.n, tuple(other.low), tuple(other.high)) != (self.n, tuple(self.low), tuple(self.high)):
            raise ValueError("cannot merge grids with different layouts")
        self.occupancy |= other.occupancy
        self.out_of_bounds += other.out_of_bounds
        return self

    @property
    def value(self) -> float:
        return float(self.occupancy.sum()) / self.n**2


def coverage(samples, grid: CoverageGrid) -> float:
    """Add ``samples`` to ``grid`` and return the occupied fraction."""
    return grid.add(samples).value


def workspace_grid(reach: float, n: int = 30) -> CoverageGrid:
    """Grid over the bounding box of a planar arm's reachable disc."""
    return CoverageGrid(n, (-reach, -reach), (reach, reach))


@dataclass
class Correlation:
    matrix: np.ndarray
    constant_channels: np.ndarray


def action_correlation(trajectory) -> Correlation:
    """Pearson correlation between action channels of a ``(T, m)`` trajectory.

    Zero-variance channels get zero rows/columns (with a zero diagonal entry)
    and are flagged in ``constant_channels``.
    """
    x = np.asarray(trajectory, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need a (T, m) trajectory with T >= 2")
    x = x - x.mean(axis=0)
    std = np.sqrt((x * x).mean(axis=0))
    constant = std <= 1e-12 * (1.0 + np.abs(x).max(initial=0.0))
    z = np.where(constant, 0.0, x / np.where(constant, 1.0, std))
    corr = z.T @ z / x.shape[0]
    corr = np.clip(0.5 * (corr + corr.T), -1.0, 1.0)
    diag = np.where(constant, 0.0, 1.0)
    np.fill_diagonal(corr, diag)
    return Correlation(corr, constant)


def max_offdiag(corr: np.ndarray) -> float:
    m = np.abs(np.asarray(corr)).copy()
    np.fill_diagonal(m, 0.0)
    return float(m.max())


def periodogram(x) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    spec = np.abs(np.fft.rfft(x)) ** 2 / len(x)
    return np.fft.rfftfreq(len(x))[1:], spec[1:]


def psd_slope(x, decades: float = 2.0) -> float:
    """Spectral exponent beta of a sequence with PSD ~ 1/f**beta.

    Least-squares fit of log-power against log-frequency over every
    periodogram ordinate in the central ``decades`` of the frequency axis.
    Log-power of a single ordinate is biased by a constant, so the slope is not.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 256:
        raise ValueError("psd_slope needs at least 256 samples")
    if np.ptp(x) == 0:
        raise ValueError("constant sequence has no spectrum")
    f, p = periodogram(x)
    lf = np.log10(f)
    mid = 0.5 * (lf[0] + lf[-1])
    sel = (lf >= mid - decades / 2) & (lf <= mid + decades / 2) & (p > 0)
    slope = np.polyfit(lf[sel], np.log10(p[sel]), 1)[0]
    return float(-slope)


def occupancy_entropy(samples, bins, ranges=None) -> float:
    """Shannon entropy (nats) of the normalized histogram of ``samples``."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("no samples")
    if samples.ndim == 1:
        samples = samples[:, None]
    b = [bins] * samples.shape[1] if np.isscalar(bins) else list(bins)
    if min(b) < 2:
        raise ValueError("need at least 2 bins per dimension")
    hist, _ = np.histogramdd(samples, bins=b, range=ranges)
    p = hist.ravel() / hist.sum()
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


__all__ = [
    "CoverageGrid",
    "Correlation",
    "action_correlation",
    "coverage",
    "max_offdiag",
    "occupancy_entropy",
    "periodogram",
    "psd_slope",
    "workspace_grid",
]
