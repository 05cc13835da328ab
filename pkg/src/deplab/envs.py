"""Episodic task wrappers: torque-driven arm, muscle-driven reaching, mountain car.

All environments share a small interface: ``reset(rng)`` returns an
``Observation``, ``step(action)`` returns ``(Observation, reward, done)``,
``dep_sensors()`` gives the calibrated DEP input, and ``action_dim`` /
``action_low`` describe the (possibly inflated) action box ``[action_low, 1]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .action_spaces import collapse_actions, inflate_sensors
from .dep import SensorNormalizer, dep_sensor, joint_sensor, simplified_dep_1d
from .dynamics import (
    VALLEY,
    ArmGeometry,
    JointState,
    MountainCarParams,
    MountainCarState,
    arm_step,
    forward_kinematics,
    mountain_car_step,
)
from .muscles import MuscleParams, muscle_arm_step, muscle_force, muscle_lengths, muscle_velocities


@dataclass(frozen=True)
class EpisodeSpec:
    horizon: int = 300
    dt: float = 0.01
    reward: str = "sparse"  # "sparse" or "none"
    terminate_on_reach: bool = True
    q_noise: float = 0.01
    qdot_noise: float = 0.03

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.reward not in ("sparse", "none"):
            raise ValueError(f"unknown reward kind {self.reward!r}")
        if self.q_noise < 0 or self.qdot_noise < 0:
            raise ValueError("reset noise scales must be non-negative")


@dataclass(frozen=True)
class GoalRegion:
    """Axis-aligned rectangle goals are drawn from, in shoulder-centred metres."""

    low: tuple[float, float] = (0.20, -0.20)
    high: tuple[float, float] = (0.55, -0.05)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high)

    def contains(self, p) -> bool:
        p = np.asarray(p)
        return bool(np.all(p >= self.low) and np.all(p <= self.high))


@dataclass(frozen=True)
class Goal:
    target: np.ndarray
    radius: float = 0.05

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("goal radius must be positive")


def sparse_reward(hand, goal: Goal) -> tuple[float, bool]:
    """10 and reached inside the goal radius, otherwise -1."""
    d = float(np.linalg.norm(np.asarray(hand) - goal.target))
    return (10.0, True) if d < goal.radius else (-1.0, False)


@dataclass
class Observation:
    q: np.ndarray
    qdot: np.ndarray
    hand: np.ndarray
    goal: np.ndarray | None = None
    muscle: dict[str, np.ndarray] = field(default_factory=dict)

    def vector(self) -> np.ndarray:
        parts = [self.q, self.qdot]
        parts += [self.muscle[k] for k in sorted(self.muscle)]
        if self.goal is not None:
            parts.append(self.goal)
        parts.append(self.hand)
        return np.concatenate(parts)

    def to_dict(self) -> dict:
        out = {"q": self.q.tolist(), "qdot": self.qdot.tolist(), "hand": self.hand.tolist()}
        if self.goal is not None:
            out["goal"] = self.goal.tolist()
        return out


def _reset_joint(spec: EpisodeSpec, geometry: ArmGeometry, rng: np.random.Generator) -> JointState:
    q = spec.q_noise * rng.standard_normal(2)
    q = np.clip(q, geometry.lower, geometry.upper)
    return JointState(q, spec.qdot_noise * rng.standard_normal(2))


class TorqueArmEnv:
    """Two-joint arm driven by joint torques, ``2n`` virtual actions in [-1, 1].

    Moves in a horizontal plane by default (no in-plane gravity) with light
    joint damping. Has no
    reward: ``step`` returns 0 and only ends an episode at the horizon.
    """

    n_native = 2
    action_low = -1.0

    def __init__(self, n: int = 1, geometry: ArmGeometry | None = None,
                 spec: EpisodeSpec | None = None):
        if n < 1:
            raise ValueError("action multiplier n must be >= 1")
        self.n = n
        self.geometry = geometry or ArmGeometry(gravity=(0.0, 0.0), damping=0.1)
        self.spec = spec or EpisodeSpec(horizon=1000, reward="none", terminate_on_reach=False)
        self.state = JointState.zeros()
        self.t = 0

    @property
    def action_dim(self) -> int:
        return self.n_native * self.n

    @property
    def n_sensors(self) -> int:
        return self.action_dim

    def observe(self) -> Observation:
        return Observation(self.state.q.copy(), self.state.qdot.copy(),
                           forward_kinematics(self.state.q, self.geometry))

    def reset(self, rng: np.random.Generator) -> Observation:
        self.state = _reset_joint(self.spec, self.geometry, rng)
        self.t = 0
        return self.observe()

    def step(self, action) -> tuple[Observation, float, bool]:
        a = np.asarray(action, dtype=float)
        if a.shape != (self.action_dim,):
            raise ValueError(f"expected {self.action_dim} actions, got shape {a.shape}")
        native = collapse_actions(np.clip(a, -1.0, 1.0), self.n)
        self.state = arm_step(self.state, self.geometry.max_torque * native, self.geometry)
        self.t += 1
        return self.observe(), 0.0, self.t >= self.spec.horizon

    def dep_sensors(self) -> np.ndarray:
        s = joint_sensor(self.state.q, self.geometry.lower, self.geometry.upper)
        return inflate_sensors(s, self.n)


class Arm26Env:
    """Two-joint arm driven by six muscles, ``6n`` virtual excitations in [0, 1].

    Gravity pulls the arm to full extension (straight down). Muscle-related
    observations are replicated ``n`` times.
    """

    n_native = 6
    action_low = 0.0

    def __init__(self, n: int = 1, geometry: ArmGeometry | None = None,
                 muscles: MuscleParams | None = None, spec: EpisodeSpec | None = None,
                 goals: GoalRegion | None = None, goal_radius: float = 0.05,
                 force_scale: float = 0.3):
        if n < 1:
            raise ValueError("action multiplier n must be >= 1")
        self.n = n
        self.geometry = geometry or ArmGeometry()
        self.muscles = muscles or MuscleParams()
        self.spec = spec or EpisodeSpec()
        self.goals = goals or GoalRegion()
        self.goal_radius = goal_radius
        self.force_scale = force_scale
        self.length_norm, self.force_norm = self.calibrate()
        self.state = JointState.zeros()
        self.activity = np.zeros(self.n_native)
        self.goal = Goal(np.zeros(2), goal_radius)
        self.t = 0

    def calibrate(self) -> tuple[SensorNormalizer, SensorNormalizer]:
        """Length range from the joint-limit corners (lengths are affine in q); force range [0, f_max]."""
        lo, hi = self.geometry.lower, self.geometry.upper
        corners = np.array([[lo[0], lo[1]], [lo[0], hi[1]], [hi[0], lo[1]], [hi[0], hi[1]]])
        lengths = SensorNormalizer().fit(muscle_lengths(corners, self.muscles))
        f_max = np.asarray(self.muscles.f_max, dtype=float)
        return lengths, SensorNormalizer(np.zeros_like(f_max), f_max)

    @property
    def action_dim(self) -> int:
        return self.n_native * self.n

    @property
    def n_sensors(self) -> int:
        return self.action_dim

    def _muscle_quantities(self):
        lengths = muscle_lengths(self.state.q, self.muscles)
        vel = muscle_velocities(self.state.qdot, self.muscles)
        forces = muscle_force(self.activity, lengths / self.muscles.l_opt, vel, self.muscles)
        return lengths, vel, forces

    def observe(self) -> Observation:
        lengths, vel, forces = self._muscle_quantities()
        rep = lambda x: inflate_sensors(x, self.n)  # noqa: E731
        muscle = {"activity": rep(self.activity), "force": rep(forces),
                  "length": rep(lengths), "velocity": rep(vel)}
        return Observation(self.state.q.copy(), self.state.qdot.copy(),
                           forward_kinematics(self.state.q, self.geometry),
                           self.goal.target.copy(), muscle)

    def reset(self, rng: np.random.Generator) -> Observation:
        self.goal = Goal(self.goals.sample(rng), self.goal_radius)
        self.state = _reset_joint(self.spec, self.geometry, rng)
        self.activity = np.zeros(self.n_native)
        self.t = 0
        return self.observe()

    def step(self, action) -> tuple[Observation, float, bool]:
        a = np.asarray(action, dtype=float)
        if a.shape != (self.action_dim,):
            raise ValueError(f"expected {self.action_dim} excitations, got shape {a.shape}")
        excitation = collapse_actions(np.clip(a, 0.0, 1.0), self.n)
        self.state, self.activity = muscle_arm_step(self.state, self.activity, excitation,
                                                    self.geometry, self.muscles)
        self.t += 1
        obs = self.observe()
        reward, reached = 0.0, False
        if self.spec.reward == "sparse":
            reward, reached = sparse_reward(obs.hand, self.goal)
        done = (reached and self.spec.terminate_on_reach) or self.t >= self.spec.horizon
        return obs, reward, done

    def dep_sensors(self) -> np.ndarray:
        lengths, _, forces = self._muscle_quantities()
        s = dep_sensor(lengths, forces, self.length_norm, self.force_norm, self.force_scale)
        return inflate_sensors(s, self.n)


def to_env_action(a, env) -> np.ndarray:
    """Map a controller output in [-1, 1] onto the environment's action box."""
    a = np.asarray(a, dtype=float)
    if env.action_low == 0.0:
        return 0.5 * (a + 1.0)
    return a


# --- mountain car -----------------------------------------------------------


@dataclass(frozen=True)
class MountainCarTask:
    """Fixed start state and horizon of the mountain-car exploration demo."""

    x0: float = -0.28
    v0: float = 0.005
    horizon: int = 1000
    params: MountainCarParams = MountainCarParams()

    @property
    def threshold(self) -> float:
        return self.params.goal


@dataclass
class McarResult:
    success: bool
    steps: int
    x: np.ndarray
    actions: np.ndarray


def mcar_sensor(x: float) -> float:
    """Position measured from the valley floor, where the slope force vanishes."""
    return x - VALLEY


def mountain_car_episode(controller: str = "dep", time_dist: int = 27, kappa: float = 1e6,
                         task: MountainCarTask = MountainCarTask(),
                         rng: np.random.Generator | None = None, noise=None) -> McarResult:
    """Run one episode and report whether the car reached the threshold.

    ``controller`` is "dep" (simplified scalar DEP), "gaussian" (standard
    normal actions from ``rng``), or "noise" (a callable noise process).
    """
    if controller not in ("dep", "gaussian", "noise"):
        raise ValueError(f"unknown controller {controller!r}")
    if controller == "gaussian" and rng is None:
        raise ValueError("gaussian controller needs an rng")
    if controller == "noise" and noise is None:
        raise ValueError("noise controller needs a noise process")
    state = MountainCarState(task.x0, task.v0)
    hist = [mcar_sensor(state.x)]
    xs, acts = [state.x], []
    for t in range(task.horizon):
        if controller == "dep":
            a = simplified_dep_1d(hist, time_dist, kappa)
        elif controller == "gaussian":
            a = float(rng.standard_normal())
        else:
            a = float(np.asarray(noise())[0])
        state = mountain_car_step(state, a, task.params)
        hist.append(mcar_sensor(state.x))
        xs.append(state.x)
        acts.append(a)
        if state.x >= task.threshold:
            return McarResult(True, t + 1, np.array(xs), np.array(acts))
    return McarResult(False, task.horizon, np.array(xs), np.array(acts))


__all__ = [
    "Arm26Env",
    "EpisodeSpec",
    "Goal",
    "GoalRegion",
    "McarResult",
    "MountainCarTask",
    "Observation",
    "TorqueArmEnv",
    "mcar_sensor",
    "mountain_car_episode",
    "sparse_reward",
    "to_env_action",
]
