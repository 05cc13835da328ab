"""Independent reference implementations used to derive expected values in the tests.

None of these import from deplab: they re-derive each quantity from first
principles with different machinery (numerical Lagrangian mechanics, complex numbers,
closed forms, direct simulation).
"""
from __future__ import annotations

import math

import numpy as np


def _com_positions(q, lengths):
    """Centres of mass of both rods; angle 0 hangs along -y, positive angles swing towards -x."""
    l1, l2 = lengths
    elbow = l1 * np.array([-math.sin(q[0]), -math.cos(q[0])])
    fore = np.array([-math.sin(q[0] + q[1]), -math.cos(q[0] + q[1])])
    return elbow / 2, elbow + l2 / 2 * fore


def _jacobians(q, lengths, h=1e-6):
    cols = []
    for k in range(2):
        dq = np.zeros(2)
        dq[k] = h
        hi = _com_positions(q + dq, lengths)
        lo = _com_positions(q - dq, lengths)
        cols.append([(a - b) / (2 * h) for a, b in zip(hi, lo)])
    return [np.column_stack([cols[0][i], cols[1][i]]) for i in range(2)]


def _mass_matrix(q, lengths, masses):
    j1, j2 = _jacobians(q, lengths)
    inertia = [m * l * l / 12 for m, l in zip(masses, lengths)]
    w1 = np.array([[1.0, 0.0]])
    w2 = np.array([[1.0, 1.0]])
    return (masses[0] * j1.T @ j1 + masses[1] * j2.T @ j2
            + inertia[0] * w1.T @ w1 + inertia[1] * w2.T @ w2)


def _potential(q, lengths, masses, gravity):
    p1, p2 = _com_positions(q, lengths)
    g = np.asarray(gravity)
    return -(masses[0] * g @ p1 + masses[1] * g @ p2)


def arm_accel(q, qd, tau, lengths, masses, gravity, damping=0.0, h=1e-5):
    """Joint accelerations from Lagrange's equations, every derivative taken numerically."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    mass = _mass_matrix(q, lengths, masses)
    dmass = []
    grav = np.zeros(2)
    for k in range(2):
        dq = np.zeros(2)
        dq[k] = h
        dmass.append((_mass_matrix(q + dq, lengths, masses) - _mass_matrix(q - dq, lengths, masses)) / (2 * h))
        grav[k] = (_potential(q + dq, lengths, masses, gravity)
                   - _potential(q - dq, lengths, masses, gravity)) / (2 * h)
    cor = np.zeros(2)
    for k in range(2):
        for i in range(2):
            for j in range(2):
                gamma = 0.5 * (dmass[i][k, j] + dmass[j][k, i] - dmass[k][i, j])
                cor[k] += gamma * qd[i] * qd[j]
    return np.linalg.solve(mass, np.asarray(tau) - cor - grav - damping * qd)


def arm_rk4(q, qd, tau, dt, steps, lengths, masses, gravity, damping=0.0):
    """Classical RK4 on the symbolic equations; returns joint angles after every step."""
    x = np.concatenate([q, qd]).astype(float)

    def f(x):
        return np.concatenate([x[2:], arm_accel(x[:2], x[2:], tau, lengths, masses, gravity, damping)])

    out = []
    for _ in range(steps):
        k1 = f(x)
        k2 = f(x + dt / 2 * k1)
        k3 = f(x + dt / 2 * k2)
        k4 = f(x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(x[:2].copy())
    return np.array(out)


def hand_complex(q, lengths):
    """Hand position via complex rotations of the downward unit vector."""
    down = -1j
    z = lengths[0] * down * np.exp(-1j * q[0]) + lengths[1] * down * np.exp(-1j * (q[0] + q[1]))
    return np.array([z.real, z.imag])


def mcar_reference(x, v, a):
    a = max(-1.0, min(1.0, a))
    v2 = v + 0.0015 * a - 0.0025 * math.cos(3 * x)
    v2 = max(-0.07, min(0.07, v2))
    x2 = max(-1.2, min(0.6, x + v2))
    if x2 <= -1.2 and v2 < 0:
        v2 = 0.0
    return x2, v2


def decay_fixed_point(C0: np.ndarray, M: np.ndarray, tau: float, k: int) -> np.ndarray:
    """Closed form of the linear recurrence C <- C + (M - C)/tau after k steps."""
    return M + (1 - 1 / tau) ** k * (C0 - M)


def occupancy_expectation(cells: int, samples: int) -> float:
    """Expected occupied fraction after uniform samples over equally likely cells."""
    return 1 - (1 - 1 / cells) ** samples


def renewal_dep_fraction_mc(p: float, h: int, steps: int, seed: int) -> float:
    """Monte Carlo of the policy/DEP renewal process built from geometric policy runs."""
    rng = np.random.default_rng(seed)
    dep = total = 0
    while total < steps:
        total += int(rng.geometric(p))
        span = min(h, max(steps - total, 0))
        dep += span
        total += span
    return dep / steps


def activation_rate(a: float, a_m: float, tau_act=0.01, tau_deact=0.04) -> float:
    if a > a_m:
        return (a - a_m) / (tau_act * (0.5 + 1.5 * a_m))
    return (a - a_m) * (0.5 + 1.5 * a_m) / tau_deact
