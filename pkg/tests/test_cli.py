import csv
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from refugelab import cli
from refugelab.config import (ConfigError, PRESETS, Built, default_config, load_config,
                              parse_config)
from refugelab.parallel import WORKERS_ENV, pmap, resolve_workers
from refugelab.verify import CheckResult

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def small_config(tmp_path, **updates):
    data = json.loads(default_config().to_json())
    data["grid"]["n_cells"] = 32
    data["harvest"]["R_values"] = [0.0, 0.5]
    data["stepper"]["t_end"] = 1.0
    for path, value in updates.items():
        node = data
        keys = path.split(".")
        for k in keys[:-1]:
            node = node[k]
        node[keys[-1]] = value
    f = tmp_path / "cfg.json"
    f.write_text(json.dumps(data, indent=2))
    return f


def run(*args):
    return cli.main([str(a) for a in args])


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    b = Built(load_config(path), base=path.parent)
    assert b.R.shape == (b.grid.n_cells,)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_round_trip(name):
    cfg = PRESETS[name]()
    assert parse_config(cfg.to_json()) == cfg
    assert json.loads((CONFIGS / f"{name}.json").read_text()) == json.loads(cfg.to_json())


def test_config_errors_name_the_location(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "params": {\n    "beta_VH": 1,\n  }\n}')
    with pytest.raises(ConfigError, match=r"bad.json:4"):
        load_config(bad)
    data = json.loads(default_config().to_json())
    data["params"]["betaVH"] = 1.0
    data["grid"]["n_cells"] = 2
    with pytest.raises(ConfigError) as err:
        parse_config(json.dumps(data))
    assert "params.betaVH" in str(err.value) and "grid.n_cells" in str(err.value)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_exit_code_for_config_errors(tmp_path, capsys):
    f = small_config(tmp_path, **{"refuge.value": 1.5})
    assert run("simulate", "--config", f, "--out", tmp_path) == cli.EXIT_CONFIG
    assert "refuge values" in capsys.readouterr().err
    f = small_config(tmp_path)
    assert run("simulate", "--config", f, "--out", tmp_path, "--seed", 2 ** 64) == cli.EXIT_CONFIG


def test_exit_code_for_trivial_regime(tmp_path):
    cfg = tmp_path / "t.json"
    cfg.write_text((CONFIGS / "trivial_m.json").read_text())
    assert run("optimize", "--config", cfg, "--out", tmp_path) == cli.EXIT_TRIVIAL


def test_exit_code_for_blow_up(tmp_path):
    f = small_config(tmp_path, **{"params.bV_r": 1e3, "params.bV_f": 1e3, "params.s_V": 1e-9,
                                  "params.h": 1e-9, "stepper.dt": 0.5, "stepper.t_end": 100.0,
                                  "initial.Vi0.value": 1.0})
    assert run("simulate", "--config", f, "--out", tmp_path) == cli.EXIT_BLOWUP


def test_exit_code_for_failed_verification(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "run_suite", lambda b, log: [CheckResult("x", True, 1.0),
                                                          CheckResult("y", False, 2.0)])
    f = small_config(tmp_path)
    assert run("verify", "--config", f, "--out", tmp_path) == cli.EXIT_FAIL
    monkeypatch.setattr(cli, "run_suite", lambda b, log: [CheckResult("x", True, 1.0),
                                                          CheckResult("z", None)])
    assert run("verify", "--config", f, "--out", tmp_path) == 0


def test_harvest_output_is_deterministic(tmp_path):
    f = small_config(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("harvest", "--config", f, "--out", a, "--seed", 3) == 0
    assert run("harvest", "--config", f, "--out", b, "--seed", 3) == 0
    for name in ("harvest_scan.csv", "harvest_reports.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rows = list(csv.reader(open(a / "harvest_scan.csv")))
    assert rows[0] == ["R", "eta", "eta_L", "eta_V", "lambda1"]
    assert len(rows) == 3


def test_parallel_harvest_matches_serial(tmp_path):
    f = small_config(tmp_path)
    assert run("harvest", "--config", f, "--out", tmp_path / "s", "--workers", 1) == 0
    assert run("harvest", "--config", f, "--out", tmp_path / "p", "--workers", 2) == 0
    assert ((tmp_path / "s" / "harvest_scan.csv").read_bytes()
            == (tmp_path / "p" / "harvest_scan.csv").read_bytes())


def test_multistart_output_is_deterministic(tmp_path):
    f = small_config(tmp_path, **{"optimize.starts": 3, "params.beta_VH": 40.0})
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("optimize", "--config", f, "--out", a, "--seed", 11) == 0
    assert run("optimize", "--config", f, "--out", b, "--seed", 11) == 0
    for name in ("refuge_opt.csv", "history.csv", "summary.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_zero_infection_summary(tmp_path):
    f = small_config(tmp_path, **{"initial.Vi0.value": 0.0})
    assert run("harvest", "--config", f, "--out", tmp_path) == 0
    rows = list(csv.DictReader(open(tmp_path / "harvest_scan.csv")))
    H0 = default_config().params.H0
    for r in rows:
        assert float(r["eta"]) == pytest.approx(H0 * 2 * (1 - float(r["R"])), rel=1e-14)
    reps = list(csv.DictReader(open(tmp_path / "harvest_reports.csv")))
    assert all(r["converged"] == "true" and float(r["T_used"]) == 0 for r in reps)


def test_simulate_keeps_predators_without_feedback(tmp_path):
    f = small_config(tmp_path, **{"params.gamma": 0.0, "refuge.value": 0.3})
    t = time.perf_counter()
    assert run("simulate", "--config", f, "--out", tmp_path) == 0
    assert time.perf_counter() - t < 5.0
    rows = list(csv.DictReader(open(tmp_path / "trajectory.csv")))
    P = np.array([float(r["P"]) for r in rows])
    p = default_config().params
    assert np.abs(P - (0.3 * p.rP_r + 0.7 * p.rP_f) / p.s_P).max() <= 1e-12
    summary = dict(l.split("=") for l in (tmp_path / "summary.txt").read_text().splitlines())
    assert float(summary["t_end"]) == 1.0 and int(summary["steps"]) == 100


def test_optimize_and_homogenize_outputs(tmp_path):
    f = small_config(tmp_path, **{"params.beta_VH": 40.0, "sweep.freqs": [1, 2]})
    assert run("optimize", "--config", f, "--out", tmp_path) == 0
    summary = (tmp_path / "summary.txt").read_text()
    assert "converged=true" in summary
    f = small_config(tmp_path, **{"refuge": {"kind": "piecewise", "breaks": [0.0],
                                             "values": [1.0, 0.0]}, "sweep.freqs": [1, 2]})
    assert run("homogenize", "--config", f, "--out", tmp_path) == 0
    rows = list(csv.reader(open(tmp_path / "sweep.csv")))
    assert rows[0] == ["n", "eta_n", "eta_inf", "abs_gap"] and len(rows) == 3


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "refugelab", "--help"], capture_output=True,
                         text=True)
    assert out.returncode == 0 and "simulate" in out.stdout


def test_worker_resolution(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert resolve_workers() == 1
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert resolve_workers() == 3 and resolve_workers(2) == 2
    with pytest.raises(ValueError):
        resolve_workers(0)
    assert pmap(abs, [-3, 1, -2], 2) == [3, 1, 2]
