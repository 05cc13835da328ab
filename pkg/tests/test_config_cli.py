import json
import subprocess
import sys

import pytest

from deplab import cli
from deplab.config import ConfigError, canonical, dep_params, load, resolve
from deplab.io import read_csv


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_defaults_fill_missing_keys():
    cfg = resolve({"kind": "explore"})
    assert cfg["n"] == [1, 300] and cfg["episodes"] == 50 and cfg["block"] == 5
    assert resolve({"kind": "mcar-demo"})["time_dists"] == list(range(5, 29)) + [50]


@pytest.mark.parametrize("raw", [
    {"kind": "explore", "episodes": 50, "epsiodes": 10},
    {"kind": "explore", "dep": {"kapa": 3}},
    {"kind": "explore", "noise": {"white": {"sigma": 1, "beta": 1}}},
    {"kind": "explore", "env_options": {"force_scale": 0.1}},
    {"kind": "explore", "seeds": []},
    {"kind": "explore", "controllers": ["dep", "ppo"]},
    {"kind": "explore", "env": "hexapod"},
    {"kind": "explore", "dep": {"preset": "humanoid"}},
    {"kind": "explore", "n": [0]},
    {"kind": "sweep"},
    {},
])
def test_invalid_configs_rejected(raw):
    with pytest.raises(ConfigError):
        resolve(raw)


def test_dep_overrides_apply_to_preset():
    p = dep_params(resolve({"kind": "explore", "env": "arm26", "dep": {"kappa": 5.0}}))
    assert p.kappa == 5.0 and p.tau == 80.0 and p.f_sign == -1.0
    assert dep_params(resolve({"kind": "explore"})).f_sign == 1.0
    with pytest.raises(ConfigError):
        dep_params(resolve({"kind": "explore", "dep": {"tau": 0.1}}))


def test_canonical_form_is_order_independent():
    a = resolve({"kind": "variance-sweep", "n": [1, 2], "samples": 1000})
    b = resolve({"samples": 1000, "n": [1, 2], "kind": "variance-sweep"})
    assert canonical(a) == canonical(b)
    assert json.loads(canonical(a)) == a


def test_yaml_loading(tmp_path):
    cfg = load(write(tmp_path, "kind: variance-sweep\nn: [1, 4]\nsamples: 5000\n"))
    assert cfg["n"] == [1, 4]
    with pytest.raises(ConfigError):
        load(write(tmp_path, "- a\n- b\n"))
    with pytest.raises(ConfigError):
        load(tmp_path / "missing.yaml")


def test_unknown_key_exits_2(tmp_path, capsys):
    p = write(tmp_path, "kind: explore\nepsiodes: 3\n")
    assert cli.main(["explore", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "epsiodes" in capsys.readouterr().err


def test_empty_seed_list_exits_2(tmp_path):
    p = write(tmp_path, "kind: explore\nseeds: []\n")
    assert cli.main(["explore", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_kind_mismatch_and_bad_flags_exit_2(tmp_path):
    p = write(tmp_path, "kind: psd-check\n")
    assert cli.main(["explore", "--config", str(p)]) == 2
    assert cli.main(["psd-check", "--config", str(p), "--workers", "0"]) == 2


def test_runtime_fault_exits_3(tmp_path, monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise FloatingPointError("integrator diverged")

    monkeypatch.setattr(cli, "run", boom)
    assert cli.main(["variance-sweep", "--out", str(tmp_path)]) == 3
    assert "integrator diverged" in capsys.readouterr().err


def small_variance(tmp_path):
    return write(tmp_path, "kind: variance-sweep\nn: [1, 3]\nsamples: 20000\nchunk: 5000\nseeds: [2]\n")


def test_header_replays_to_identical_file(tmp_path):
    cfg = small_variance(tmp_path)
    assert cli.main(["variance-sweep", "--config", str(cfg), "--seed-offset", "4",
                     "--out", str(tmp_path / "a")]) == 0
    first = (tmp_path / "a" / "variance.csv").read_bytes()
    meta, rows = read_csv(tmp_path / "a" / "variance.csv")
    assert meta["seed_offset"] == "4" and json.loads(meta["config"])["seeds"] == [2]
    replay = write(tmp_path, meta["config"], "replay.yaml")
    assert cli.main(["variance-sweep", "--config", str(replay), "--seed-offset", meta["seed_offset"],
                     "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "variance.csv").read_bytes() == first
    assert b"\r" not in first and len(rows) == 4


def test_seed_offset_changes_output(tmp_path):
    cfg = small_variance(tmp_path)
    cli.main(["variance-sweep", "--config", str(cfg), "--out", str(tmp_path / "a")])
    cli.main(["variance-sweep", "--config", str(cfg), "--seed-offset", "1", "--out", str(tmp_path / "b")])
    _, a = read_csv(tmp_path / "a" / "variance.csv")
    _, b = read_csv(tmp_path / "b" / "variance.csv")
    assert [r["empirical_variance"] for r in a] != [r["empirical_variance"] for r in b]


def test_step_logs_only_with_flag(tmp_path):
    cfg = write(tmp_path, "kind: explore\nn: [1]\ncontrollers: [dep]\nepisodes: 2\nsteps: 30\nblock: 1\n")
    cli.main(["explore", "--config", str(cfg), "--out", str(tmp_path / "a")])
    assert not (tmp_path / "a" / "trajectories.ndjson").exists()
    cli.main(["explore", "--config", str(cfg), "--out", str(tmp_path / "b"), "--log-steps"])
    lines = (tmp_path / "b" / "trajectories.ndjson").read_text().splitlines()
    assert "meta" in json.loads(lines[0])
    steps = [json.loads(x) for x in lines[1:]]
    assert len(steps) == 60 and {"t", "state", "action", "reward", "tag"} <= set(steps[0])


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "deplab.cli", "mcar-demo", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.strip().endswith("mcar.csv")
