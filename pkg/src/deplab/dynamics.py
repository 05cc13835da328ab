"""Planar two-link arm and 1-D mountain car dynamics.

Angles follow one convention throughout the package: ``q = (0, 0)`` is the
fully extended arm hanging along the gravity direction (straight down), and
positive angles rotate the hand towards negative ``x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

DEG = math.pi / 180.0


@dataclass(frozen=True)
class JointState:
    q: np.ndarray
    qdot: np.ndarray

    @classmethod
    def zeros(cls) -> "JointState":
        return cls(np.zeros(2), np.zeros(2))


@dataclass(frozen=True)
class ArmGeometry:
    """Link parameters of the planar arm.

    Each control step of length ``dt`` is integrated with ``substeps``
    semi-implicit Euler substeps.
    """

    lengths: tuple[float, float] = (0.30, 0.33)
    masses: tuple[float, float] = (1.0, 1.0)
    lower: tuple[float, float] = (-120 * DEG, -120 * DEG)
    upper: tuple[float, float] = (120 * DEG, 120 * DEG)
    gravity: tuple[float, float] = (0.0, -9.81)
    dt: float = 0.01
    substeps: int = 50
    damping: float = 0.0
    max_torque: float = 5.0

    def __post_init__(self):
        if min(self.lengths) <= 0 or min(self.masses) <= 0:
            raise ValueError("link lengths and masses must be positive")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("joint limits need lower < upper")
        if self.dt <= 0 or self.substeps < 1:
            raise ValueError("dt must be positive and substeps >= 1")
        if self.damping < 0:
            raise ValueError("damping must be non-negative")

    @property
    def reach(self) -> float:
        return self.lengths[0] + self.lengths[1]

    def packed(self) -> np.ndarray:
        """Parameter vector consumed by the compiled kernels."""
        l1, l2 = self.lengths
        m1, m2 = self.masses
        return np.array([l1, l2, m1, m2, self.gravity[0], self.gravity[1], self.damping])


@njit(cache=True)
def _accel(q0, q1, qd0, qd1, t0, t1, p):
    l1, l2, m1, m2, gx, gy, damp = p[0], p[1], p[2], p[3], p[4], p[5], p[6]
    lc1 = 0.5 * l1
    lc2 = 0.5 * l2
    i1 = m1 * l1 * l1 / 12.0
    i2 = m2 * l2 * l2 / 12.0
    c2 = math.cos(q1)
    s2 = math.sin(q1)
    m11 = i1 + i2 + m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2)
    m12 = i2 + m2 * (lc2 * lc2 + l1 * lc2 * c2)
    m22 = i2 + m2 * lc2 * lc2
    h = m2 * l1 * lc2 * s2
    cor0 = -h * (2.0 * qd0 * qd1 + qd1 * qd1)
    cor1 = h * qd0 * qd0
    # generalized gravity force: sum_i m_i J_i^T g for the link centres of mass
    ca = math.cos(q0)
    sa = math.sin(q0)
    cb = math.cos(q0 + q1)
    sb = math.sin(q0 + q1)
    # d(position)/dq for x = -l sin(.), y = -l cos(.)
    g0 = (m1 * lc1 + m2 * l1) * (-ca * gx + sa * gy) + m2 * lc2 * (-cb * gx + sb * gy)
    g1 = m2 * lc2 * (-cb * gx + sb * gy)
    r0 = t0 - cor0 + g0 - damp * qd0
    r1 = t1 - cor1 + g1 - damp * qd1
    det = m11 * m22 - m12 * m12
    return (m22 * r0 - m12 * r1) / det, (-m12 * r0 + m11 * r1) / det


@njit(cache=True)
def _arm_integrate(q, qd, tau, p, dt, substeps, lower, upper):
    h = dt / substeps
    q0, q1, qd0, qd1 = q[0], q[1], qd[0], qd[1]
    for _ in range(substeps):
        a0, a1 = _accel(q0, q1, qd0, qd1, tau[0], tau[1], p)
        qd0 += h * a0
        qd1 += h * a1
        q0 += h * qd0
        q1 += h * qd1
        if q0 < lower[0] or q0 > upper[0]:
            q0 = min(max(q0, lower[0]), upper[0])
            qd0 = 0.0
        if q1 < lower[1] or q1 > upper[1]:
            q1 = min(max(q1, lower[1]), upper[1])
            qd1 = 0.0
    return np.array([q0, q1]), np.array([qd0, qd1])


def _check_finite(name: str, x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values: {x!r}")


def arm_step(state: JointState, torques, geometry: ArmGeometry) -> JointState:
    """Advance the torque-driven arm by one control step.

    Joints that leave their limits are clamped and their velocity zeroed.
    Torques are applied as given; clipping to ``max_torque`` is the caller's job.
    """
    tau = np.asarray(torques, dtype=float)
    if tau.shape != (2,):
        raise ValueError(f"expected 2 joint torques, got shape {tau.shape}")
    _check_finite("torques", tau)
    _check_finite("q", state.q)
    _check_finite("qdot", state.qdot)
    q, qd = _arm_integrate(
        np.asarray(state.q, dtype=float),
        np.asarray(state.qdot, dtype=float),
        tau,
        geometry.packed(),
        geometry.dt,
        geometry.substeps,
        np.asarray(geometry.lower),
        np.asarray(geometry.upper),
    )
    return JointState(q, qd)


def forward_kinematics(q, geometry: ArmGeometry) -> np.ndarray:
    """Hand position (x, y) in metres. Accepts a single ``q`` or a ``(T, 2)`` batch."""
    q = np.asarray(q, dtype=float)
    l1, l2 = geometry.lengths
    a = q[..., 0]
    b = q[..., 0] + q[..., 1]
    x = -l1 * np.sin(a) - l2 * np.sin(b)
    y = -l1 * np.cos(a) - l2 * np.cos(b)
    return np.stack([x, y], axis=-1)


def elbow_position(q, geometry: ArmGeometry) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    l1 = geometry.lengths[0]
    return np.stack([-l1 * np.sin(q[..., 0]), -l1 * np.cos(q[..., 0])], axis=-1)


def kinetic_energy(state: JointState, geometry: ArmGeometry) -> float:
    l1, l2 = geometry.lengths
    m1, m2 = geometry.masses
    lc1, lc2 = l1 / 2, l2 / 2
    i1, i2 = m1 * l1**2 / 12, m2 * l2**2 / 12
    c2 = math.cos(state.q[1])
    m11 = i1 + i2 + m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * c2)
    m12 = i2 + m2 * (lc2**2 + l1 * lc2 * c2)
    m22 = i2 + m2 * lc2**2
    mass = np.array([[m11, m12], [m12, m22]])
    return 0.5 * float(state.qdot @ mass @ state.qdot)


# --- mountain car -----------------------------------------------------------


@dataclass(frozen=True)
class MountainCarParams:
    force_scale: float = 0.0015
    gravity_scale: float = 0.0025
    x_min: float = -1.2
    x_max: float = 0.6
    v_max: float = 0.07
    goal: float = 0.45


@dataclass(frozen=True)
class MountainCarState:
    x: float
    v: float


VALLEY = -math.pi / 6


def mountain_car_step(
    state: MountainCarState, action: float, params: MountainCarParams = MountainCarParams()
) -> MountainCarState:
    a = min(max(float(action), -1.0), 1.0)
    v = state.v + a * params.force_scale - params.gravity_scale * math.cos(3.0 * state.x)
    v = min(max(v, -params.v_max), params.v_max)
    x = min(max(state.x + v, params.x_min), params.x_max)
    if x == params.x_min and v < 0:
        v = 0.0
    return MountainCarState(x, v)


__all__ = [
    "ArmGeometry",
    "JointState",
    "MountainCarParams",
    "MountainCarState",
    "VALLEY",
    "arm_step",
    "elbow_position",
    "forward_kinematics",
    "kinetic_energy",
    "mountain_car_step",
]
