import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from poisson_pinsker import cli
from poisson_pinsker.estimate import empirical_coeffs, pinsker_bandwidth, read_estimate
from poisson_pinsker.model import raised_cosine, save_model
from poisson_pinsker.simulate import read_observations


def run(*argv):
    return cli.main([str(a) for a in argv])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))[1:]


def test_help_lists_every_flag():
    out = subprocess.run([sys.executable, "-m", "poisson_pinsker.cli", "sweep", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    for flag in ("--config", "--model", "--m", "--R", "--S-override", "--plug-in-S", "--n",
                 "--n-list", "--reps", "--seed", "--mode", "--workers", "--pooled", "--L-max",
                 "--grid-size", "--observations", "--out-dir", "--prefix"):
        assert flag in out.stdout
    top = subprocess.run([sys.executable, "-m", "poisson_pinsker.cli", "--help"],
                         capture_output=True, text=True)
    assert top.returncode == 0 and "check-membership" in top.stdout


def test_simulate_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run("simulate", "--n", 20, "--seed", 4, "--out-dir", tmp_path / d) == 0
    a = (tmp_path / "a" / "observations.csv").read_bytes()
    assert a == (tmp_path / "b" / "observations.csv").read_bytes()
    obs = read_observations(tmp_path / "a" / "observations.csv")
    assert len(rows(tmp_path / "a" / "observations.csv")) == obs.counts().sum()
    resolved = json.loads((tmp_path / "a" / "config.resolved.json").read_text())
    assert resolved["seed"] == 4 and resolved["command"] == "simulate"


def test_simulate_n_zero_is_config_error(tmp_path, capsys):
    assert run("simulate", "--n", 0, "--out-dir", tmp_path) == 2
    assert "n must be ≥ 1" in capsys.readouterr().err
    assert not (tmp_path / "config.resolved.json").exists()


def test_subprocess_exit_code(tmp_path):
    out = subprocess.run([sys.executable, "-m", "poisson_pinsker.cli", "simulate", "--n", "0",
                          "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 2 and "n must be" in out.stderr


def test_estimate_roundtrip(tmp_path):
    assert run("simulate", "--n", 40, "--seed", 1, "--out-dir", tmp_path) == 0
    obs_path = tmp_path / "observations.csv"
    assert run("estimate", "--observations", obs_path, "--L-max", 30, "--out-dir", tmp_path) == 0
    emp = read_estimate(tmp_path / "empirical.csv")
    pin = read_estimate(tmp_path / "pinsker.csv")
    side = json.loads((tmp_path / "pinsker.json").read_text())
    R = 25 * math.pi**4 / 8
    assert side["R"] == pytest.approx(R, rel=1e-14)
    assert side["alpha"] == pinsker_bandwidth(2, side["R"], 5.0, 1.0, 40)
    assert len(pin.coeffs) <= math.floor(side["N"]) + 1
    assert emp.coeffs.size == 31
    mem = empirical_coeffs(read_observations(obs_path), 30)
    t = np.linspace(0, 1, 101)
    assert np.max(np.abs(emp(t) - mem(t))) < 1e-12


def test_estimate_tau_mismatch(tmp_path, capsys):
    model = tmp_path / "m.json"
    save_model(raised_cosine(5.0, tau=2.0), model)
    assert run("simulate", "--n", 5, "--out-dir", tmp_path) == 0
    code = run("estimate", "--model", model, "--observations", tmp_path / "observations.csv",
               "--R", 100, "--out-dir", tmp_path)
    assert code == 2 and "tau mismatch" in capsys.readouterr().err


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 3, "colour": "blue"}))
    assert run("simulate", "--config", cfg, "--out-dir", tmp_path) == 2
    assert "colour" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 3, "seed": 8, "model": "two-harmonic"}))
    assert run("simulate", "--config", cfg, "--n", 4, "--out-dir", tmp_path) == 0
    resolved = json.loads((tmp_path / "config.resolved.json").read_text())
    assert resolved["n"] == 4 and resolved["seed"] == 8 and resolved["model"] == "two-harmonic"


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PINSKER_SEED", "77")
    assert run("simulate", "--n", 2, "--out-dir", tmp_path) == 0
    assert json.loads((tmp_path / "observations.json").read_text())["seed"] == 77


def test_sweep_command(tmp_path):
    assert run("sweep", "--n-list", "1e4,1e6,1e8", "--out-dir", tmp_path) == 0
    r = [float(row[7]) for row in rows(tmp_path / "sweep.csv")]
    assert len(r) == 3 and r[0] < r[1] < r[2] < 1
    assert run("sweep", "--n-list", "100,10", "--out-dir", tmp_path) == 2


def test_risk_command(tmp_path):
    assert run("risk", "--n", 10, "--reps", 20, "--seed", 3, "--out-dir", tmp_path) == 0
    report = json.loads((tmp_path / "risk.json").read_text())
    assert report["report"]["reps"] == 20 and report["provenance"]["command"] == "risk"
    assert run("risk", "--n", 10, "--reps", 1, "--out-dir", tmp_path) == 2


def test_check_membership(tmp_path, capsys):
    assert run("check-membership", "--R", 305, "--out-dir", tmp_path) == 0
    assert json.loads(capsys.readouterr().out)["member"] is True
    assert run("check-membership", "--R", 300, "--out-dir", tmp_path) == 0
    verdict = json.loads((tmp_path / "membership.json").read_text())["verdict"]
    assert verdict["member"] is False and "sobolev excess" in verdict["reasons"]
