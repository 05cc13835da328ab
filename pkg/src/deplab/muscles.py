"""Hill-type muscles with rigid tendons and first-order activation dynamics.

Path lengths are affine in the joint angles, ``l_total = l_ref - R @ q``, so
fiber velocities are ``-R @ qdot`` and joint torques are ``R.T @ F``. A
positive moment arm marks a muscle that pulls the joint towards positive
angles (a "flexor" in this package's naming).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .dynamics import ArmGeometry, JointState, _accel, _check_finite

MUSCLE_NAMES = (
    "shoulder_flexor",
    "shoulder_extensor",
    "elbow_flexor",
    "elbow_extensor",
    "biarticular_flexor",
    "biarticular_extensor",
)

# antagonist pairs by muscle index
ANTAGONISTS = ((0, 1), (2, 3), (4, 5))


def _default_moment_arms() -> np.ndarray:
    mono, bi = 0.04, 0.03
    return np.array(
        [
            [mono, 0.0],
            [-mono, 0.0],
            [0.0, mono],
            [0.0, -mono],
            [bi, bi],
            [-bi, -bi],
        ]
    )


@dataclass(frozen=True)
class MuscleParams:
    f_max: np.ndarray = field(default_factory=lambda: np.full(6, 100.0))
    l_opt: np.ndarray = field(default_factory=lambda: np.array([0.12, 0.12, 0.12, 0.12, 0.18, 0.18]))
    l_tendon: np.ndarray = field(default_factory=lambda: np.array([0.20, 0.20, 0.15, 0.15, 0.25, 0.25]))
    # fiber length at q = 0 in units of l_opt
    rest_stretch: float = 1.0
    moment_arms: np.ndarray = field(default_factory=_default_moment_arms)
    tau_act: float = 0.01
    tau_deact: float = 0.04
    v_max: float = 10.0  # in optimal fiber lengths per second
    passive_gain: float = 3.0

    def __post_init__(self):
        n = len(self.f_max)
        for name in ("l_opt", "l_tendon"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have one entry per muscle")
        if np.any(np.asarray(self.f_max) <= 0) or np.any(np.asarray(self.l_opt) <= 0):
            raise ValueError("f_max and l_opt must be positive")
        if not 0 < self.tau_act < self.tau_deact:
            raise ValueError("need 0 < tau_act < tau_deact")
        r = np.asarray(self.moment_arms)
        if r.shape != (n, 2):
            raise ValueError(f"moment arm matrix must be ({n}, 2), got {r.shape}")

    @property
    def n_muscles(self) -> int:
        return len(self.f_max)

    @property
    def l_ref(self) -> np.ndarray:
        """Musculotendon length at q = 0."""
        return np.asarray(self.l_tendon) + self.rest_stretch * np.asarray(self.l_opt)

    def with_force_scale(self, scale: float) -> "MuscleParams":
        return replace(self, f_max=np.asarray(self.f_max) * scale)

    def packed(self) -> np.ndarray:
        return np.array([self.tau_act, self.tau_deact, self.v_max, self.passive_gain])


def arm26_sparsity_ok(moment_arms: np.ndarray) -> bool:
    """Four muscles cross exactly one joint and two cross both."""
    spans = (np.abs(np.asarray(moment_arms)) > 0).sum(axis=1)
    return sorted(spans.tolist()) == [1, 1, 1, 1, 2, 2]


def activation_tau(a_m, a, params: MuscleParams):
    a_m = np.asarray(a_m, dtype=float)
    a = np.asarray(a, dtype=float)
    rising = params.tau_act * (0.5 + 1.5 * a_m)
    falling = params.tau_deact / (0.5 + 1.5 * a_m)
    return np.where(a > a_m, rising, falling)


def activation_derivative(a_m, a, params: MuscleParams):
    a = np.clip(a, 0.0, 1.0)
    return (a - np.asarray(a_m, dtype=float)) / activation_tau(a_m, a, params)


def activation_step(a_m, a, dt: float, params: MuscleParams):
    """One explicit Euler step of the activity dynamics, clamped to [0, 1]."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    a = np.clip(a, 0.0, 1.0)
    return np.clip(a_m + dt * activation_derivative(a_m, a, params), 0.0, 1.0)


def muscle_lengths(q, params: MuscleParams) -> np.ndarray:
    """Fiber lengths (m); accepts a single ``q`` or a ``(T, 2)`` batch."""
    q = np.asarray(q, dtype=float)
    return params.l_ref - q @ np.asarray(params.moment_arms).T - params.l_tendon


def muscle_velocities(qdot, params: MuscleParams) -> np.ndarray:
    return -np.asarray(qdot, dtype=float) @ np.asarray(params.moment_arms).T


def force_length(l_norm):
    l_norm = np.asarray(l_norm, dtype=float)
    return np.where(np.abs(l_norm - 1.0) <= 0.5, 1.0 - 4.0 * (l_norm - 1.0) ** 2, 0.0)


def force_velocity(v, l_opt, v_max: float = 10.0):
    return np.clip(1.0 + np.asarray(v, dtype=float) / (v_max * np.asarray(l_opt)), 0.0, 1.35)


def force_passive(l_norm, gain: float = 3.0):
    l_norm = np.asarray(l_norm, dtype=float)
    return np.where(l_norm > 1.0, gain * (l_norm - 1.0) ** 2, 0.0)


def muscle_force(a_m, l_norm, v, params: MuscleParams) -> np.ndarray:
    active = np.asarray(a_m) * force_length(l_norm) * force_velocity(v, params.l_opt, params.v_max)
    return np.asarray(params.f_max) * (active + force_passive(l_norm, params.passive_gain))


def joint_torques_from_muscles(forces, params: MuscleParams) -> np.ndarray:
    forces = np.asarray(forces, dtype=float)
    if np.any(forces < 0):
        raise ValueError("muscle forces must be non-negative")
    return forces @ np.asarray(params.moment_arms)


@dataclass(frozen=True)
class MuscleState:
    activity: np.ndarray
    length: np.ndarray
    velocity: np.ndarray
    force: np.ndarray


def muscle_state(joint: JointState, activity, params: MuscleParams) -> MuscleState:
    lengths = muscle_lengths(joint.q, params)
    vel = muscle_velocities(joint.qdot, params)
    force = muscle_force(activity, lengths / params.l_opt, vel, params)
    return MuscleState(np.asarray(activity, dtype=float), lengths, vel, force)


@njit(cache=True)
def _muscle_arm_integrate(q, qd, act, exc, p_arm, dt, substeps, lower, upper,
                          f_max, l_opt, l_fib0, r, p_mus):
    tau_a, tau_d, v_max, passive = p_mus[0], p_mus[1], p_mus[2], p_mus[3]
    h = dt / substeps
    n = act.shape[0]
    act = act.copy()
    q0, q1, qd0, qd1 = q[0], q[1], qd[0], qd[1]
    for _ in range(substeps):
        t0 = 0.0
        t1 = 0.0
        for i in range(n):
            am = act[i]
            if exc[i] > am:
                tau = tau_a * (0.5 + 1.5 * am)
            else:
                tau = tau_d / (0.5 + 1.5 * am)
            am += h * (exc[i] - am) / tau
            am = min(max(am, 0.0), 1.0)
            act[i] = am
            ln = (l_fib0[i] - r[i, 0] * q0 - r[i, 1] * q1) / l_opt[i]
            v = -(r[i, 0] * qd0 + r[i, 1] * qd1)
            fl = 0.0
            if abs(ln - 1.0) <= 0.5:
                fl = 1.0 - 4.0 * (ln - 1.0) ** 2
            fv = min(max(1.0 + v / (v_max * l_opt[i]), 0.0), 1.35)
            fp = 0.0
            if ln > 1.0:
                fp = passive * (ln - 1.0) ** 2
            f = f_max[i] * (am * fl * fv + fp)
            t0 += r[i, 0] * f
            t1 += r[i, 1] * f
        a0, a1 = _accel(q0, q1, qd0, qd1, t0, t1, p_arm)
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
    return np.array([q0, q1]), np.array([qd0, qd1]), act


def muscle_arm_step(joint: JointState, activity, excitation, geometry: ArmGeometry,
                    params: MuscleParams) -> tuple[JointState, np.ndarray]:
    """Advance the muscle-driven arm by one control step.

    Returns the new joint state and the new muscle activity. Excitations are
    clipped to [0, 1].
    """
    exc = np.clip(np.asarray(excitation, dtype=float), 0.0, 1.0)
    if exc.shape != (params.n_muscles,):
        raise ValueError(f"expected {params.n_muscles} excitations, got shape {exc.shape}")
    _check_finite("excitation", exc)
    q, qd, act = _muscle_arm_integrate(
        np.asarray(joint.q, dtype=float),
        np.asarray(joint.qdot, dtype=float),
        np.asarray(activity, dtype=float),
        exc,
        geometry.packed(),
        geometry.dt,
        geometry.substeps,
        np.asarray(geometry.lower),
        np.asarray(geometry.upper),
        np.asarray(params.f_max, dtype=float),
        np.asarray(params.l_opt, dtype=float),
        params.l_ref - np.asarray(params.l_tendon),
        np.ascontiguousarray(params.moment_arms, dtype=float),
        params.packed(),
    )
    return JointState(q, qd), act


__all__ = [
    "ANTAGONISTS",
    "MUSCLE_NAMES",
    "MuscleParams",
    "MuscleState",
    "activation_derivative",
    "activation_step",
    "activation_tau",
    "arm26_sparsity_ok",
    "force_length",
    "force_passive",
    "force_velocity",
    "joint_torques_from_muscles",
    "muscle_arm_step",
    "muscle_force",
    "muscle_lengths",
    "muscle_state",
    "muscle_velocities",
]
