"""Experiment configuration: YAML files with a closed set of keys per experiment kind."""
from __future__ import annotations

import copy
import json
from dataclasses import fields
from pathlib import Path

import yaml

from .dep import PRESETS, DepParams

KINDS = ("explore", "mcar-demo", "correlate", "variance-sweep", "psd-check", "prefill-compare")
ENVS = ("torquearm", "arm26")
CONTROLLERS = ("dep", "white", "pink", "red", "ou")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


DEFAULTS: dict[str, dict] = {
    "explore": {
        "env": "torquearm",
        "controllers": ["dep", "white", "pink", "red", "ou"],
        "n": [1, 300],
        "seeds": [0],
        "episodes": 50,
        "steps": 1000,
        "block": 5,
        "grid": 30,
        "dep": {},
        "noise": {},
        "env_options": {},
    },
    "mcar-demo": {
        "time_dists": list(range(5, 29)) + [50],
        "kappa": 1e6,
        "horizon": 1000,
        "x0": -0.28,
        "v0": 0.005,
        "seeds": [0],
        "random_trials": 1,
    },
    "correlate": {
        "env": "arm26",
        "controllers": ["dep", "white"],
        "n": [1],
        "seeds": [0],
        "steps": 1000,
        "dep": {},
        "noise": {},
        "env_options": {},
    },
    "variance-sweep": {
        "n": [1, 2, 10, 100, 300],
        "samples": 1_000_000,
        "seeds": [0],
        "chunk": 20_000,
    },
    "psd-check": {
        "betas": [0.0, 1.0, 2.0],
        "length": 65536,
        "seeds": [0],
        "ou": [[0.1, 0.07], [0.05, 0.05]],
        "ou_length": 1_048_576,
        "ou_lags": 3.0,
    },
    "prefill-compare": {
        "env": "arm26",
        "steps": 5000,
        "seeds": [0],
        "white_sigma": 0.5,
        "grid": 30,
        "dep": {},
        "env_options": {},
    },
}

NOISE_KEYS = {"white": {"sigma"}, "pink": {"sigma", "beta"}, "red": {"sigma", "beta"},
              "ou": {"sigma", "theta"}}
ENV_OPTION_KEYS = {"torquearm": {"damping", "max_torque", "gravity"},
                   "arm26": {"force_scale", "f_max_scale", "damping"}}
DEP_KEYS = {f.name for f in fields(DepParams)} | {"preset"}


def _int_list(cfg: dict, key: str, minimum: int) -> None:
    v = cfg[key]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{key!r} must be a non-empty list")
    if not all(isinstance(x, int) and not isinstance(x, bool) and x >= minimum for x in v):
        raise ConfigError(f"{key!r} entries must be integers >= {minimum}")


def _positive_int(cfg: dict, key: str) -> None:
    v = cfg[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ConfigError(f"{key!r} must be a positive integer")


def _validate(cfg: dict) -> None:
    kind = cfg["kind"]
    if "seeds" in cfg:
        _int_list(cfg, "seeds", 0)
    if "n" in cfg:
        _int_list(cfg, "n", 1)
    for key in ("episodes", "steps", "block", "grid", "horizon", "samples", "chunk",
                "length", "ou_length", "random_trials"):
        if key in cfg:
            _positive_int(cfg, key)
    if "env" in cfg and cfg["env"] not in ENVS:
        raise ConfigError(f"unknown env {cfg['env']!r}; choose from {ENVS}")
    if "controllers" in cfg:
        bad = [c for c in cfg["controllers"] if c not in CONTROLLERS]
        if bad or not cfg["controllers"]:
            raise ConfigError(f"unknown controllers {bad}; choose from {CONTROLLERS}")
    if "dep" in cfg:
        dep = cfg["dep"]
        if not isinstance(dep, dict):
            raise ConfigError("'dep' must be a mapping")
        unknown = set(dep) - DEP_KEYS
        if unknown:
            raise ConfigError(f"unknown dep keys {sorted(unknown)}")
        if "preset" in dep and dep["preset"] not in PRESETS:
            raise ConfigError(f"unknown dep preset {dep['preset']!r}")
        try:
            dep_params(cfg)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid dep parameters: {exc}") from exc
    if "noise" in cfg:
        if not isinstance(cfg["noise"], dict):
            raise ConfigError("'noise' must be a mapping")
        for name, opts in cfg["noise"].items():
            if name not in NOISE_KEYS:
                raise ConfigError(f"unknown noise {name!r}")
            if not isinstance(opts, dict) or set(opts) - NOISE_KEYS[name]:
                raise ConfigError(f"noise {name!r} accepts only {sorted(NOISE_KEYS[name])}")
    if "env_options" in cfg:
        opts = cfg["env_options"]
        allowed = ENV_OPTION_KEYS[cfg["env"]]
        if not isinstance(opts, dict) or set(opts) - allowed:
            raise ConfigError(f"env_options for {cfg['env']} accept only {sorted(allowed)}")
    if kind == "explore" and cfg["episodes"] % cfg["block"]:
        raise ConfigError("'episodes' must be a multiple of 'block'")
    if kind == "mcar-demo":
        _int_list(cfg, "time_dists", 1)
        if cfg["kappa"] <= 0:
            raise ConfigError("'kappa' must be positive")
    if kind == "psd-check":
        ou = cfg["ou"]
        if not isinstance(ou, list) or not all(isinstance(p, list) and len(p) == 2 for p in ou):
            raise ConfigError("'ou' must be a list of [theta, sigma] pairs")
    if kind == "prefill-compare" and not 0 < cfg["white_sigma"]:
        raise ConfigError("'white_sigma' must be positive")


def resolve(raw: dict | None) -> dict:
    """Merge a raw mapping onto the defaults of its kind; raises ConfigError."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"'kind' must be one of {KINDS}, got {kind!r}")
    defaults = DEFAULTS[kind]
    unknown = set(raw) - set(defaults) - {"kind"}
    if unknown:
        raise ConfigError(f"unknown keys for {kind}: {sorted(unknown)}")
    cfg = {"kind": kind, **copy.deepcopy(defaults)}
    cfg.update(copy.deepcopy(raw))
    _validate(cfg)
    return cfg


def load(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    return resolve(raw)


def dep_params(cfg: dict) -> DepParams:
    """DEP parameters of a resolved config: the named preset plus overrides."""
    opts = dict(cfg.get("dep", {}))
    base = PRESETS[opts.pop("preset", "arm")]
    values = {**base.to_dict(), **opts}
    if cfg.get("env") == "torquearm" and "f_sign" not in opts:
        values["f_sign"] = 1.0
    return DepParams(**values)


def canonical(cfg: dict) -> str:
    """Stable one-line JSON form, used in output headers."""
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


__all__ = ["CONTROLLERS", "ConfigError", "DEFAULTS", "ENVS", "KINDS", "canonical",
           "dep_params", "load", "resolve"]
