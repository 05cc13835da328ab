"""Differential extrinsic plasticity (DEP).

The controller emits ``a = tanh(kappa * C_norm @ s + h)`` and learns ``C`` from
the time-lagged correlation of sensor velocities::

    C <- C + (f(ds_now) ds_past^T - C) / tau

followed by a per-column normalization. ``ds_now`` is ``s[t] - s[t-1]``; the
past velocity is the difference taken ``time_dist`` steps before the current
one starts, i.e. ``s[t-time_dist-1] - s[t-time_dist-2]``, so the two difference
windows are separated by exactly ``time_dist`` steps.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from numba import njit


def _max_norm(C: np.ndarray) -> np.ndarray:
    return np.abs(C).max(axis=0)


def _l2_norm(C: np.ndarray) -> np.ndarray:
    return np.sqrt((C * C).sum(axis=0))


NORMS = {"max": _max_norm, "l2": _l2_norm}


@dataclass(frozen=True)
class DepParams:
    kappa: float = 1000.0
    tau: float = 80.0
    time_dist: int = 60
    buffer_size: int = 600
    bias_rate: float = 2e-5
    s4avg: int = 6
    eps: float = 1e-9
    force_scale: float = 0.0
    f_sign: float = -1.0
    norm: str = "max"

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.time_dist < 1 or self.time_dist + 2 >= self.buffer_size:
            raise ValueError("need 1 <= time_dist and time_dist + 3 <= buffer_size")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.s4avg < 0:
            raise ValueError("s4avg must be >= 0")
        if self.norm not in NORMS:
            raise ValueError(f"unknown norm {self.norm!r}; choose from {sorted(NORMS)}")

    @property
    def warmup(self) -> int:
        """Number of smoothed samples needed before C can be updated."""
        return self.time_dist + 3

    def to_dict(self) -> dict:
        return asdict(self)


# Named settings for arm reaching and legged locomotion.
PRESETS = {
    "arm": DepParams(kappa=1000.0, tau=80.0, time_dist=60, buffer_size=600,
                     bias_rate=2e-5, s4avg=6),
    "locomotion": DepParams(kappa=20.0, tau=8.0, time_dist=5, buffer_size=90,
                            bias_rate=0.03, s4avg=1),
}


def normalize_C(C: np.ndarray, eps: float, norm: str = "max") -> np.ndarray:
    """Divide each column j by ``||C[:, j]|| + eps``."""
    C = np.asarray(C, dtype=float)
    return C / (NORMS[norm](C) + eps)


def lagged_velocities(history: Sequence, time_dist: int):
    """Current and past sensor velocities, or ``None`` while warming up."""
    if len(history) < time_dist + 3:
        return None
    now = np.asarray(history[-1]) - np.asarray(history[-2])
    past = np.asarray(history[-time_dist - 2]) - np.asarray(history[-time_dist - 3])
    return now, past


@njit(cache=True)
def _learn(C, fnow, past, tau, l2, out_norm):
    """In-place ``C += (fnow past^T - C) / tau`` fused with the column norms."""
    rate = 1.0 / tau
    keep = 1.0 - rate
    m, n = C.shape
    out_norm[:] = 0.0
    for i in range(m):
        fi = rate * fnow[i]
        for j in range(n):
            c = keep * C[i, j] + fi * past[j]
            C[i, j] = c
            if l2:
                out_norm[j] += c * c
            elif abs(c) > out_norm[j]:
                out_norm[j] = abs(c)
    if l2:
        for j in range(n):
            out_norm[j] = math.sqrt(out_norm[j])


class DepController:
    """Stateful DEP controller for one environment instance.

    ``f_matrix`` replaces the ``f_sign * identity`` inverse model when the
    number of sensors differs from the number of actions.

    The normalized matrix is never materialized on the hot path: the action
    uses ``C @ (s / (norm + eps))``, which equals ``normalize_C(C) @ s``.
    """

    def __init__(self, n_sensors: int, params: DepParams = DepParams(),
                 n_actions: int | None = None, f_matrix: np.ndarray | None = None):
        self.params = params
        self.n_sensors = int(n_sensors)
        self.n_actions = int(n_actions if n_actions is not None else n_sensors)
        if f_matrix is None and self.n_actions != self.n_sensors:
            raise ValueError("an inverse-model matrix is required when actions != sensors")
        if f_matrix is not None:
            f_matrix = np.asarray(f_matrix, dtype=float)
            if f_matrix.shape != (self.n_actions, self.n_sensors):
                raise ValueError(f"f_matrix must be ({self.n_actions}, {self.n_sensors})")
        self.f_matrix = f_matrix
        self.reset()

    def reset(self) -> None:
        p = self.params
        self.C = np.zeros((self.n_actions, self.n_sensors))
        self._col_norm = np.zeros(self.n_sensors)
        self.h = np.zeros(self.n_actions)
        self.history: deque = deque(maxlen=p.buffer_size)
        self._raw: deque = deque(maxlen=max(p.s4avg, 1))
        self.last_action = np.zeros(self.n_actions)
        self.n_updates = 0

    @property
    def C_norm(self) -> np.ndarray:
        return self.C / (self._col_norm + self.params.eps)

    def _smooth(self, s: np.ndarray) -> np.ndarray:
        self._raw.append(s)
        if len(self._raw) == 1:
            return s
        return np.mean(self._raw, axis=0)

    def _inverse_model(self, ds: np.ndarray) -> np.ndarray:
        if self.f_matrix is None:
            return self.params.f_sign * ds
        return self.f_matrix @ ds

    def update(self, s) -> None:
        """Record sensor vector ``s`` and, after warm-up, learn C and the bias."""
        s = np.asarray(s, dtype=float)
        if s.shape != (self.n_sensors,):
            raise ValueError(f"expected {self.n_sensors} sensors, got shape {s.shape}")
        p = self.params
        self.history.append(self._smooth(s))
        vel = lagged_velocities(self.history, p.time_dist)
        if vel is None:
            return
        now, past = vel
        _learn(self.C, np.ascontiguousarray(self._inverse_model(now), dtype=float),
               np.ascontiguousarray(past, dtype=float), float(p.tau), p.norm == "l2",
               self._col_norm)
        self.h = np.clip(self.h - p.bias_rate * self.last_action, -1.0, 1.0)
        self.n_updates += 1

    def act(self, s=None) -> np.ndarray:
        """Action for the latest recorded sensors (or for ``s`` if given)."""
        if s is None:
            x = self.history[-1] if self.history else np.zeros(self.n_sensors)
        else:
            x = np.asarray(s, dtype=float)
        drive = self.C @ (x / (self._col_norm + self.params.eps))
        a = np.tanh(self.params.kappa * drive + self.h)
        self.last_action = a
        return a

    def step(self, s) -> np.ndarray:
        self.update(s)
        return self.act()

    def snapshot(self) -> dict:
        return {"C": self.C.copy(), "C_norm": self.C_norm, "h": self.h.copy()}


def simplified_dep_1d(history: Sequence[float], time_dist: int, kappa: float) -> float:
    """Scalar DEP rule ``a = tanh(kappa * ds_now * ds_past) * s``; zero while warming up."""
    vel = lagged_velocities(history, time_dist)
    if vel is None:
        return 0.0
    now, past = vel
    return math.tanh(kappa * float(now) * float(past)) * float(history[-1])


class SensorNormalizer:
    """Per-channel affine map of calibrated [min, max] onto [-1, 1].

    Values outside the calibrated range are extrapolated linearly.
    """

    def __init__(self, low=None, high=None):
        self.low = None if low is None else np.asarray(low, dtype=float)
        self.high = None if high is None else np.asarray(high, dtype=float)

    @property
    def calibrated(self) -> bool:
        return self.low is not None and self.high is not None

    def fit(self, samples) -> "SensorNormalizer":
        samples = np.asarray(samples, dtype=float)
        self.low = samples.min(axis=0)
        self.high = samples.max(axis=0)
        return self

    def __call__(self, x) -> np.ndarray:
        if not self.calibrated:
            raise RuntimeError("normalizer used before calibration")
        span = np.where(self.high > self.low, self.high - self.low, 1.0)
        return 2.0 * (np.asarray(x, dtype=float) - self.low) / span - 1.0


def dep_sensor(lengths, forces, length_norm: SensorNormalizer, force_norm: SensorNormalizer,
               force_scale: float) -> np.ndarray:
    """Fused muscle sensor: normalized length plus ``force_scale`` times normalized force."""
    s = length_norm(lengths)
    if force_scale:
        s = s + force_scale * force_norm(forces)
    elif not force_norm.calibrated:
        raise RuntimeError("force normalizer used before calibration")
    return s


def joint_sensor(q, lower, upper) -> np.ndarray:
    """Joint angles mapped from their limits onto [-1, 1]."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    return 2.0 * (np.asarray(q, dtype=float) - lower) / (upper - lower) - 1.0


__all__ = [
    "DepController",
    "DepParams",
    "PRESETS",
    "SensorNormalizer",
    "dep_sensor",
    "joint_sensor",
    "lagged_velocities",
    "normalize_C",
    "simplified_dep_1d",
]
