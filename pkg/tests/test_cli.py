import json
import os

import numpy as np
import pytest

from cornerflow import cli, config
from cornerflow.errors import ConfigError


def test_preset_roundtrip_through_ini():
    for name in config.PRESETS:
        cfg = config.preset(name)
        text = config.config_to_ini(cfg)
        back = config.config_from_ini(text)
        assert back.eos_family == cfg.eos_family
        assert back.eos_params == pytest.approx(cfg.eos_params)
        assert back.u0 == pytest.approx(cfg.u0)
        assert back.theta == pytest.approx(cfg.theta)
        assert back.grid_n == cfg.grid_n
        assert back.outputs == cfg.outputs


def test_config_validation_errors():
    cfg = config.preset("poly")
    from dataclasses import replace
    with pytest.raises(ConfigError):
        replace(cfg, theta=0.5).validate()
    with pytest.raises(ConfigError):
        replace(cfg, grid_n=4).validate()
    with pytest.raises(ConfigError):
        replace(cfg, u0=0.5).validate()
    with pytest.raises(ConfigError):
        config.config_from_ini("[eos]\nfamily = nope\n[flow]\nu0=3\ntheta=-0.3\n")
    with pytest.raises(ConfigError):
        config.config_from_ini("[eos]\nfamily=polytropic\nbogus=1\n"
                               "[flow]\nu0=3\ntheta=-0.3\n")


def test_cli_preset_listing(capsys):
    assert cli.main(["preset"]) == 0
    out = capsys.readouterr().out
    for name in ("dam-break", "mhd", "vdw", "poly"):
        assert name in out
    assert cli.main(["preset", "--dump", "dam-break"]) == 0
    dumped = capsys.readouterr().out
    cfg = config.config_from_ini(dumped)
    assert cfg.eos_family == "shallow_water"


def test_cli_solve_poly_small(tmp_path):
    out = str(tmp_path / "run")
    rc = cli.main(["solve", "--preset", "poly", "--n", "33", "--out", out])
    assert rc == 0
    for f in ("grid.csv", "grid.npz", "pq.csv", "pr.csv", "vacuum.csv",
              "vacuum.json", "audit.json", "hypothesis.json", "residuals.json",
              "config.ini"):
        assert os.path.exists(os.path.join(out, f)), f
    with open(os.path.join(out, "grid.csv")) as fh:
        header = fh.readline().strip()
    assert header == "xi,eta,u,v,tau,phi,alpha,beta,status"
    audit = json.load(open(os.path.join(out, "audit.json")))
    assert audit["passed"] is True
    assert audit["schema_version"] == "1"


def test_cli_solve_hypothesis_gate(tmp_path):
    ini = """
[eos]
family = polytropic
A = 1.0
gamma = 2.0

[flow]
u0 = 1.697
tau0 = 1.0
theta = -0.3

[grid]
n = 16
"""
    path = tmp_path / "bad.ini"
    path.write_text(ini)
    rc = cli.main(["solve", "--config", str(path), "--out", str(tmp_path / "o")])
    assert rc == 3
    assert os.path.exists(tmp_path / "o" / "hypothesis.json")
    assert not os.path.exists(tmp_path / "o" / "grid.csv")


def test_cli_config_error_exit_code(tmp_path):
    path = tmp_path / "broken.ini"
    path.write_text("[eos]\nfamily = polytropic\nA=1\ngamma=2\n"
                    "[flow]\nu0 = 3.0\ntheta = 0.4\n")   # theta out of range
    assert cli.main(["solve", "--config", str(path)]) == 2
    assert cli.main(["solve", "--config", str(tmp_path / "missing.ini")]) == 2


def test_cli_check_hypothesis_exit_codes(tmp_path):
    ok = cli.main(["check-hypothesis", "--eos", "vdw", "--S1", "0.28",
                   "--gamma", "0.05", "--tau0", "8",
                   "--out", str(tmp_path)])
    assert ok == 0
    assert os.path.exists(tmp_path / "hypothesis.json")
    bad = cli.main(["check-hypothesis", "--eos", "polytropic", "--A", "1",
                    "--gamma", "2", "--u0", "1.697"])
    assert bad == 3


def test_cli_analyze_eos(tmp_path):
    rc = cli.main(["analyze-eos", "--eos", "shallow_water", "--g", "2",
                   "--k", "1", "--tau-max", "40", "--out", str(tmp_path)])
    assert rc == 0
    rows = open(tmp_path / "eos_profile.csv").read().splitlines()
    assert rows[0] == "tau,m,dm_dtau,delta_bar,psi,chi"
    data = np.array([r.split(",") for r in rows[1:]], dtype=float)
    assert np.all(data[1:, 2] > 0)          # m' > 0 for shallow water
    assert np.all(np.abs(data[:, 5]) < 1e-10)  # chi == 0


def test_cli_export_roundtrip(tmp_path):
    out = str(tmp_path / "run")
    assert cli.main(["solve", "--preset", "poly", "--n", "17", "--out", out]) == 0
    assert cli.main(["export", "--run", out, "--what", "grid",
                     "--format", "json"]) == 0
    payload = json.load(open(os.path.join(out, "grid_export.json")))
    assert payload["shape"] == [17, 17]
    assert cli.main(["export", "--run", out, "--what", "grid",
                     "--format", "csv"]) == 0
    a = open(os.path.join(out, "grid.csv")).read()
    b = open(os.path.join(out, "grid_export.csv")).read()
    assert a == b


def test_cli_validate_quick(tmp_path):
    rc = cli.main(["validate", "--preset", "poly", "--resolutions", "8,16,32",
                   "--out", str(tmp_path)])
    assert rc == 0
    lines = open(tmp_path / "convergence.csv").read().splitlines()
    assert lines[0].startswith("metric,n=8,n=16,n=32")


def test_cli_solve_determinism_small(tmp_path):
    o1, o2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.main(["solve", "--preset", "mhd", "--n", "25", "--out", o1]) == 0
    assert cli.main(["solve", "--preset", "mhd", "--n", "25", "--out", o2]) == 0
    g1 = open(os.path.join(o1, "grid.csv"), "rb").read()
    g2 = open(os.path.join(o2, "grid.csv"), "rb").read()
    assert g1 == g2
