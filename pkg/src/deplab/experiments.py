"""Experiment drivers behind the command line.

Every experiment expands its config into independent cells, evaluates them
(optionally in worker processes) and concatenates the rows in cell order, so
the output does not depend on the number of workers.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .action_spaces import collapse_actions, predicted_effective_variance
from .config import canonical, dep_params
from .dep import DepController
from .dynamics import ArmGeometry, MountainCarParams
from .envs import Arm26Env, EpisodeSpec, MountainCarTask, TorqueArmEnv, mountain_car_episode, to_env_action
from .io import write_csv, write_ndjson
from .metrics import CoverageGrid, action_correlation, max_offdiag, psd_slope
from .muscles import ANTAGONISTS, MuscleParams
from .noise import (
    ColoredNoise,
    ColoredNoiseParams,
    OUNoise,
    OUParams,
    WhiteNoise,
    autocorrelation,
    ou_sequence,
    powerlaw_psd_gaussian,
)
from .scheduler import ReplayBuffer, noise_prefill, prefill

# Baselines run in the bang-bang regime that maximizes per-actuator variance.
NOISE_DEFAULTS = {
    "white": {"sigma": 1.0},
    "pink": {"sigma": 1.0, "beta": 1.0},
    "red": {"sigma": 1.0, "beta": 2.0},
    "ou": {"sigma": 0.3, "theta": 0.1},
}


def cell_rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(list(key))


def make_env(name: str, n: int, options: dict, horizon: int, task: bool = False):
    """Build an environment; ``task=False`` gives a reward-free, horizon-only episode."""
    if task:
        spec = EpisodeSpec(horizon=horizon)
    else:
        spec = EpisodeSpec(horizon=horizon, reward="none", terminate_on_reach=False)
    if name == "torquearm":
        geo = ArmGeometry(gravity=tuple(options.get("gravity", (0.0, 0.0))),
                          damping=float(options.get("damping", 0.1)),
                          max_torque=float(options.get("max_torque", 5.0)))
        return TorqueArmEnv(n, geo, spec)
    if name == "arm26":
        geo = ArmGeometry(damping=float(options.get("damping", 0.0)))
        muscles = MuscleParams().with_force_scale(float(options.get("f_max_scale", 1.0)))
        return Arm26Env(n, geo, muscles, spec, force_scale=float(options.get("force_scale", 0.3)))
    raise ValueError(f"unknown env {name!r}")


class Explorer:
    """A controller producing [-1, 1] actions for an environment, DEP or noise."""

    def __init__(self, name: str, env, rng: np.random.Generator, cfg: dict):
        self.name = name
        self.env = env
        if name == "dep":
            self.dep = DepController(env.n_sensors, dep_params(cfg))
            self.noise = None
            return
        self.dep = None
        opts = {**NOISE_DEFAULTS[name], **cfg.get("noise", {}).get(name, {})}
        dim = env.action_dim
        if name == "white":
            self.noise = WhiteNoise(dim, opts["sigma"], rng)
        elif name == "ou":
            self.noise = OUNoise(dim, OUParams(theta=opts["theta"], sigma=opts["sigma"]), rng)
        else:
            params = ColoredNoiseParams(beta=opts["beta"], sigma=opts["sigma"],
                                        horizon=max(env.spec.horizon, 2))
            self.noise = ColoredNoise(dim, params, rng)

    def reset_block(self) -> None:
        if self.dep is not None:
            self.dep.reset()

    def reset_episode(self) -> None:
        if self.noise is not None:
            self.noise.reset()

    def act(self) -> np.ndarray:
        if self.dep is not None:
            return self.dep.step(self.env.dep_sensors())
        return self.noise()


@dataclass(frozen=True)
class ExploreCell:
    controller: str
    controller_index: int
    n: int
    seed: int


def _step_record(cell: "ExploreCell", block: int, episode: int, t: int, obs, action, reward) -> str:
    # actions are logged collapsed to the native actuators to keep n=300 logs small
    rec = {"controller": cell.controller, "n": cell.n, "seed": cell.seed, "block": block,
           "episode": episode, "t": t, "state": obs.to_dict(), "action": action.tolist(),
           "reward": float(reward), "tag": "dep" if cell.controller == "dep" else "policy"}
    return json.dumps(rec, separators=(",", ":")) + "\n"


def explore_cell(cfg: dict, cell: ExploreCell, log_steps: bool = False):
    """Coverage per block of episodes for one (controller, n, seed) cell."""
    env = make_env(cfg["env"], cell.n, cfg["env_options"], cfg["steps"])
    env_rng = cell_rng(cell.seed, 0)
    explorer = Explorer(cell.controller, env, cell_rng(cell.seed, 1, cell.n, cell.controller_index), cfg)
    rows, steps = [], []
    reach = env.geometry.reach
    for block in range(cfg["episodes"] // cfg["block"]):
        explorer.reset_block()
        grid = CoverageGrid(cfg["grid"], (-reach, -reach), (reach, reach))
        for ep in range(cfg["block"]):
            env.reset(env_rng)
            explorer.reset_episode()
            hands = np.empty((cfg["steps"], 2))
            for t in range(cfg["steps"]):
                a = to_env_action(explorer.act(), env)
                obs, reward, _ = env.step(a)
                hands[t] = obs.hand
                if log_steps:
                    steps.append(_step_record(cell, block, block * cfg["block"] + ep, t, obs,
                                              collapse_actions(a, cell.n), reward))
            grid.add(hands)
        rows.append([cell.controller, cell.n, cell.seed, block, grid.value])
    return rows, steps


def mcar_cell(cfg: dict, key: tuple):
    task = MountainCarTask(cfg["x0"], cfg["v0"], cfg["horizon"], MountainCarParams())
    kind, value, seed = key
    if kind == "dep":
        res = mountain_car_episode("dep", value, cfg["kappa"], task)
        return [["dep", value, cfg["kappa"], seed, 0, res.success, res.steps, float(res.x.max())]]
    res = mountain_car_episode("gaussian", task=task, rng=cell_rng(seed, 2, value))
    return [["gaussian", "", "", seed, value, res.success, res.steps, float(res.x.max())]]


def variance_cell(cfg: dict, key: tuple):
    n, seed = key
    rng = cell_rng(seed, 3, n)
    total, chunk = cfg["samples"], cfg["chunk"]
    iid = np.empty(total)
    copied = np.empty(total)
    for start in range(0, total, chunk):
        k = min(chunk, total - start)
        # uniform on [-1, 1] is 2u - 1; collapsing is linear, so map after averaging
        u = rng.random((k, n))
        iid[start:start + k] = 2.0 * collapse_actions(u, n)[:, 0] - 1.0
        copied[start:start + k] = 2.0 * collapse_actions(np.repeat(u[:, :1], n, axis=1), n)[:, 0] - 1.0
    var = 1.0 / 3.0
    rows = []
    for label, x, rho in (("iid", iid, 0.0), ("copied", copied, 1.0)):
        pred = predicted_effective_variance(var, n, rho)
        emp = float(np.var(x))
        rows.append([label, n, seed, total, emp, pred, emp / pred])
    return rows


def psd_cell(cfg: dict, key: tuple):
    kind, idx, seed = key
    rng = cell_rng(seed, 4, idx)
    if kind == "colored":
        beta = float(cfg["betas"][idx])
        x = powerlaw_psd_gaussian(beta, (1, cfg["length"]), rng)[0]
        est = psd_slope(x)
        return [["colored", beta, "", seed, cfg["length"], est, abs(est - beta), ""]]
    theta, sigma = (float(v) for v in cfg["ou"][idx])
    x = np.clip(ou_sequence(OUParams(theta=theta, sigma=sigma), cfg["ou_length"], rng)[:, 0], -1.0, 1.0)
    lags = int(np.ceil(cfg["ou_lags"] / theta))
    acf = autocorrelation(x, lags)
    model = np.exp(-theta * np.arange(lags + 1))
    r2 = 1.0 - np.sum((acf - model) ** 2) / np.sum((acf - acf.mean()) ** 2)
    return [["ou", theta, sigma, seed, cfg["ou_length"], "", "", float(r2)]]


def correlate_cell(cfg: dict, cell: ExploreCell):
    env = make_env(cfg["env"], cell.n, cfg["env_options"], cfg["steps"])
    env.reset(cell_rng(cell.seed, 0))
    explorer = Explorer(cell.controller, env, cell_rng(cell.seed, 1, cell.n, cell.controller_index), cfg)
    actions = np.empty((cfg["steps"], env.action_dim))
    for t in range(cfg["steps"]):
        a = explorer.act()
        env.step(to_env_action(a, env))
        actions[t] = a
    corr = action_correlation(collapse_actions(actions, cell.n))
    m = corr.matrix
    entries = [[cell.controller, cell.n, cell.seed, i, j, float(m[i, j])]
               for i in range(m.shape[0]) for j in range(m.shape[1])]
    if cfg["env"] == "arm26":
        antagonist = min(float(m[i, j]) for i, j in ANTAGONISTS)
    else:
        antagonist = float("nan")
    summary = [cell.controller, cell.n, cell.seed, max_offdiag(m), antagonist,
               int(corr.constant_channels.sum())]
    return entries, summary


def prefill_cell(cfg: dict, key: tuple):
    controller, seed = key
    env = make_env(cfg["env"], 1, cfg["env_options"], 300, task=cfg["env"] == "arm26")
    hands: list = []
    buffer = ReplayBuffer(cfg["steps"])
    env_rng = cell_rng(seed, 0)
    if controller == "dep":
        prefill(env, DepController(env.n_sensors, dep_params(cfg)), cfg["steps"], buffer, env_rng, hands)
    else:
        noise = WhiteNoise(env.action_dim, cfg["white_sigma"], cell_rng(seed, 5))
        noise_prefill(env, noise, cfg["steps"], buffer, env_rng, hands)
    reach = env.geometry.reach
    grid = CoverageGrid(cfg["grid"], (-reach, -reach), (reach, reach)).add(np.array(hands))
    return [[controller, seed, cfg["steps"], len(buffer), grid.value]]


def _star(args):
    fn, cfg, key = args
    return fn(cfg, key)


def run_cells(fn, cfg: dict, keys: list, workers: int = 1) -> list:
    """Evaluate ``fn(cfg, key)`` for every key, results in key order."""
    jobs = [(fn, cfg, k) for k in keys]
    if workers <= 1 or len(keys) <= 1:
        return [_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_star, jobs))


def _meta(cfg: dict, seed_offset: int) -> dict:
    return {"deplab": __version__, "config": canonical(cfg), "seed_offset": str(seed_offset)}


def _offset(cfg: dict, seed_offset: int) -> dict:
    return {**cfg, "seeds": [s + seed_offset for s in cfg["seeds"]]}


def run_explore(cfg: dict, out: str | Path, workers: int = 1, seed_offset: int = 0,
                log_steps: bool = False) -> list[Path]:
    run = _offset(cfg, seed_offset)
    cells = [ExploreCell(c, ci, n, s) for ci, c in enumerate(run["controllers"])
             for n in run["n"] for s in run["seeds"]]
    results = run_cells(_explore_job, {**run, "_log": log_steps}, cells, workers)
    rows = [r for res in results for r in res[0]]
    out = Path(out)
    meta = _meta(cfg, seed_offset)
    paths = [write_csv(out / "coverage.csv", ["controller", "n", "seed", "block", "coverage"], rows, meta)]
    if log_steps:
        text = "".join(line for res in results for line in res[1])
        paths.append(write_ndjson(out / "trajectories.ndjson", text, meta))
    return paths


def _explore_job(cfg: dict, cell: ExploreCell):
    return explore_cell(cfg, cell, cfg.get("_log", False))


def run_mcar_demo(cfg: dict, out: str | Path, workers: int = 1, seed_offset: int = 0) -> list[Path]:
    run = _offset(cfg, seed_offset)
    keys = [("dep", dt, s) for s in run["seeds"] for dt in run["time_dists"]]
    keys += [("gaussian", k, s) for s in run["seeds"] for k in range(run["random_trials"])]
    rows = [r for res in run_cells(mcar_cell, run, keys, workers) for r in res]
    cols = ["controller", "time_dist", "kappa", "seed", "trial", "success", "steps", "max_x"]
    return [write_csv(Path(out) / "mcar.csv", cols, rows, _meta(cfg, seed_offset))]


def run_variance_sweep(cfg: dict, out: str | Path, workers: int = 1, seed_offset: int = 0) -> list[Path]:
    run = _offset(cfg, seed_offset)
    keys = [(n, s) for s in run["seeds"] for n in run["n"]]
    rows = [r for res in run_cells(variance_cell, run, keys, workers) for r in res]
    cols = ["channels", "n", "seed", "samples", "empirical_variance", "predicted_variance", "ratio"]
    return [write_csv(Path(out) / "variance.csv", cols, rows, _meta(cfg, seed_offset))]


def run_psd_check(cfg: dict, out: str | Path, workers: int = 1, seed_offset: int = 0) -> list[Path]:
    run = _offset(cfg, seed_offset)
    keys = [("colored", i, s) for s in run["seeds"] for i in range(len(run["betas"]))]
    keys += [("ou", i, s) for s in run["seeds"] for i in range(len(run["ou"]))]
    rows = [r for res in run_cells(psd_cell, run, keys, workers) for r in res]
    cols = ["process", "param", "sigma", "seed", "length", "estimate", "abs_error", "r2"]
    return [write_csv(Path(out) / "psd.csv", cols, rows, _meta(cfg, seed_offset))]


def run_correlate(cfg: dict, out: str | Path, workers: int = 1, seed_offset: int = 0) -> list[Path]:
    run = _offset(cfg, seed_offset)
    cells = [ExploreCell(c, ci, n, s) for ci, c in enumerate(run["controllers"])
             for n in run["n"] for s in run["seeds"]]
    results = run_cells(correlate_cell, run, cells, workers)
    meta = _meta(cfg, seed_offset)
    out = Path(out)
    return [
        write_csv(out / "correlation.csv", ["controller", "n", "seed", "row", "col", "value"],
                  [e for res in results for e in res[0]], meta),
        write_csv(out / "correlation_summary.csv",
                  ["controller", "n", "seed", "max_abs_offdiag", "min_antagonist", "constant_channels"],
                  [res[1] for res in results], meta),
    ]


def run_prefill_compare(cfg: dict, out: str | Path, workers: int = 1, seed_offset: int = 0) -> list[Path]:
    run = _offset(cfg, seed_offset)
    keys = [(c, s) for s in run["seeds"] for c in ("dep", "white")]
    rows = [r for res in run_cells(prefill_cell, run, keys, workers) for r in res]
    cols = ["controller", "seed", "steps", "buffer_size", "coverage"]
    return [write_csv(Path(out) / "prefill.csv", cols, rows, _meta(cfg, seed_offset))]


RUNNERS = {
    "explore": run_explore,
    "mcar-demo": run_mcar_demo,
    "correlate": run_correlate,
    "variance-sweep": run_variance_sweep,
    "psd-check": run_psd_check,
    "prefill-compare": run_prefill_compare,
}


def run(cfg: dict, out: str | Path, workers: int = 1, seed_offset: int = 0,
        log_steps: bool = False) -> list[Path]:
    kind = cfg["kind"]
    if kind == "explore":
        return run_explore(cfg, out, workers, seed_offset, log_steps)
    return RUNNERS[kind](cfg, out, workers, seed_offset)


__all__ = ["Explorer", "NOISE_DEFAULTS", "RUNNERS", "make_env", "run", "run_cells"] + [
    f"run_{k.replace('-', '_')}" for k in RUNNERS
]
