"""Handing control back and forth between a task policy and DEP.

Modes:

* ``init_only``: the policy always acts (DEP is only used for prefill).
* ``stoch``: after every policy step DEP takes over with probability
  ``p_switch`` for exactly ``h_dep`` steps.
* ``det``: ``h_rl`` policy steps alternate with ``h_dep`` DEP steps.
* ``avg``: every action is ``(1 - w_avg) * policy + w_avg * dep``.

Controllers emit actions in [-1, 1]; ``to_env_action`` maps them onto the
environment's action box before stepping.
"""
from __future__ import annotations

import csv
import io
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .envs import to_env_action

MODES = ("init_only", "avg", "det", "stoch")
TAGS = ("policy", "dep", "avg")

Policy = Callable[[object], np.ndarray]


@dataclass(frozen=True)
class SwitchConfig:
    mode: str = "stoch"
    p_switch: float = 0.01
    h_dep: int = 20
    h_rl: int = 100
    w_avg: float = 0.5
    background_learning: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if not 0.0 <= self.p_switch <= 1.0:
            raise ValueError("p_switch must lie in [0, 1]")
        if self.h_dep < 1 or self.h_rl < 1:
            raise ValueError("horizons must be >= 1")
        if not 0.0 <= self.w_avg <= 1.0:
            raise ValueError("w_avg must lie in [0, 1]")

    def dep_fraction(self) -> float:
        """Long-run fraction of DEP-controlled steps."""
        if self.mode == "stoch":
            ph = self.p_switch * self.h_dep
            return ph / (1.0 + ph)
        if self.mode == "det":
            return self.h_dep / (self.h_dep + self.h_rl)
        return 0.0


@dataclass
class SwitchState:
    dep_left: int = 0
    policy_left: int = 0


def next_controller(state: SwitchState, config: SwitchConfig, rng: np.random.Generator) -> str:
    """Tag of the controller acting this step; advances ``state`` in place.

    In ``stoch`` mode the switch is drawn once per policy step, so a DEP span
    can start again right after the previous one ended with a single policy step.
    """
    mode = config.mode
    if mode == "avg":
        return "avg"
    if mode == "init_only":
        return "policy"
    if state.dep_left > 0:
        state.dep_left -= 1
        return "dep"
    if mode == "stoch":
        if rng.random() < config.p_switch:
            state.dep_left = config.h_dep
        return "policy"
    # det: h_rl policy steps, then h_dep DEP steps
    if state.policy_left == 0:
        state.policy_left = config.h_rl
    state.policy_left -= 1
    if state.policy_left == 0:
        state.dep_left = config.h_dep
    return "policy"


def tag_sequence(config: SwitchConfig, n_steps: int, rng: np.random.Generator) -> list[str]:
    state = SwitchState()
    return [next_controller(state, config, rng) for _ in range(n_steps)]


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool
    tag: str

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown controller tag {self.tag!r}")


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)

    def add(self, tr: Transition) -> None:
        self._items.append(tr)

    def extend(self, items: Iterable[Transition]) -> None:
        for tr in items:
            self.add(tr)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __getitem__(self, i: int) -> Transition:
        return self._items[i]

    def sample(self, batch: int, rng: np.random.Generator) -> list[Transition]:
        idx = rng.integers(0, len(self._items), size=batch)
        return [self._items[i] for i in idx]

    def to_csv(self, stream=None) -> str:
        """Write ``tag,reward,done,state_*,action_*,next_state_*`` rows; returns the text."""
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        if self._items:
            first = self._items[0]
            w.writerow(["tag", "reward", "done"]
                       + [f"state_{i}" for i in range(len(first.state))]
                       + [f"action_{i}" for i in range(len(first.action))]
                       + [f"next_state_{i}" for i in range(len(first.next_state))])
        for tr in self._items:
            w.writerow([tr.tag, repr(float(tr.reward)), int(tr.done)]
                       + [repr(float(x)) for x in tr.state]
                       + [repr(float(x)) for x in tr.action]
                       + [repr(float(x)) for x in tr.next_state])
        text = out.getvalue()
        if stream is not None:
            stream.write(text)
        return text


@dataclass
class EpisodeLog:
    t: list[int] = field(default_factory=list)
    states: list[dict] = field(default_factory=list)
    actions: list[np.ndarray] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    tags: list[str] = field(default_factory=list)
    hands: list[np.ndarray] = field(default_factory=list)
    done: bool = False

    def __len__(self) -> int:
        return len(self.t)

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))

    def to_ndjson(self, stream=None) -> str:
        lines = []
        for i in range(len(self.t)):
            lines.append(json.dumps({
                "t": self.t[i],
                "state": self.states[i],
                "action": [float(x) for x in self.actions[i]],
                "reward": self.rewards[i],
                "tag": self.tags[i],
            }, separators=(",", ":")))
        text = "".join(line + "\n" for line in lines)
        if stream is not None:
            stream.write(text)
        return text


class EpisodeFault(RuntimeError):
    """An environment step failed; ``log`` holds every step completed before it."""

    def __init__(self, message: str, log: EpisodeLog):
        super().__init__(message)
        self.log = log


def zero_policy(dim: int) -> Policy:
    return lambda obs: np.zeros(dim)


def constant_policy(value) -> Policy:
    value = np.asarray(value, dtype=float)
    return lambda obs: value.copy()


def run_episode(env, policy: Policy, dep, config: SwitchConfig, rng: np.random.Generator,
                switch: SwitchState | None = None, buffer: ReplayBuffer | None = None,
                reset: bool = True, max_steps: int | None = None) -> EpisodeLog:
    """Roll out one episode under the switching scheme and log every step.

    DEP sees the sensors of every step when ``background_learning`` is set,
    otherwise only while it acts. Transitions go into ``buffer`` if given.
    """
    switch = switch or SwitchState()
    obs = env.reset(rng) if reset else env.observe()
    log = EpisodeLog()
    limit = max_steps if max_steps is not None else env.spec.horizon
    for t in range(limit):
        tag = next_controller(switch, config, rng)
        if config.background_learning or tag != "policy":
            dep.update(env.dep_sensors())
        if tag == "policy":
            a = np.asarray(policy(obs), dtype=float)
        elif tag == "dep":
            a = dep.act()
        else:
            a = (1.0 - config.w_avg) * np.asarray(policy(obs), dtype=float) + config.w_avg * dep.act()
        env_a = to_env_action(a, env)
        try:
            nxt, reward, done = env.step(env_a)
        except Exception as exc:
            raise EpisodeFault(f"environment step {t} failed: {exc}", log) from exc
        log.t.append(t)
        log.states.append(obs.to_dict())
        log.actions.append(env_a)
        log.rewards.append(float(reward))
        log.tags.append(tag)
        log.hands.append(nxt.hand)
        if buffer is not None:
            buffer.add(Transition(obs.vector(), env_a, float(reward), nxt.vector(), bool(done), tag))
        obs = nxt
        if done:
            log.done = True
            break
    return log


def prefill(env, dep, n_steps: int, buffer: ReplayBuffer, rng: np.random.Generator,
            hands: list | None = None) -> ReplayBuffer:
    """Fill ``buffer`` with ``n_steps`` DEP-only transitions, resetting on episode end.

    Hand positions are appended to ``hands`` when a list is passed.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    obs = env.reset(rng) if n_steps else None
    for _ in range(n_steps):
        a = to_env_action(dep.step(env.dep_sensors()), env)
        nxt, reward, done = env.step(a)
        buffer.add(Transition(obs.vector(), a, float(reward), nxt.vector(), bool(done), "dep"))
        if hands is not None:
            hands.append(nxt.hand)
        obs = env.reset(rng) if done else nxt
    return buffer


def noise_prefill(env, noise, n_steps: int, buffer: ReplayBuffer, rng: np.random.Generator,
                  hands: list | None = None) -> ReplayBuffer:
    """Same as ``prefill`` with a noise process in place of DEP; transitions tagged as policy."""
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    obs = env.reset(rng) if n_steps else None
    for _ in range(n_steps):
        a = to_env_action(noise(), env)
        nxt, reward, done = env.step(a)
        buffer.add(Transition(obs.vector(), a, float(reward), nxt.vector(), bool(done), "policy"))
        if hands is not None:
            hands.append(nxt.hand)
        if done:
            noise.reset()
            obs = env.reset(rng)
        else:
            obs = nxt
    return buffer


__all__ = [
    "EpisodeFault",
    "EpisodeLog",
    "MODES",
    "ReplayBuffer",
    "SwitchConfig",
    "SwitchState",
    "Transition",
    "constant_policy",
    "next_controller",
    "noise_prefill",
    "prefill",
    "run_episode",
    "tag_sequence",
    "zero_policy",
]
