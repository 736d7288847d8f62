import json
import math

import pytest

from supergw import cli
from supergw.config import ConfigError, load_config, parse_law


def test_xi_binary(tmp_path, capsys):
    code = cli.run(["xi", "--law", "binary:0.25", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert f"xi = {math.log(3):.10f}" in out
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["pass"] and abs(rep["blocks"][0]["xi"] - math.log(3)) <= 1e-10


def test_unknown_subcommand(capsys):
    assert cli.run(["bogus"]) == 2
    assert "usage" in capsys.readouterr().err


def test_bad_law_is_config_error(tmp_path):
    assert cli.run(["xi", "--law", "nope:1", "--out", str(tmp_path)]) == 3


def test_unknown_key_is_config_error(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[run]\nexperiment = xi\n[sampling]\nfoo = 1\n")
    assert cli.run(["xi", "--config", str(cfg), "--out", str(tmp_path)]) == 3


def test_invalid_window_is_config_error(tmp_path):
    cfg = tmp_path / "w.cfg"
    cfg.write_text("[run]\nexperiment = cm4-check\n[model]\nlambda = -1000\nn = 10\n")
    assert cli.run(["cm4-check", "--config", str(cfg), "--out", str(tmp_path)]) == 3


def test_failing_block_exits_one(tmp_path):
    cfg = tmp_path / "f.cfg"
    # a tolerance of zero cannot be met
    cfg.write_text("[run]\nexperiment = extinction\n[sampling]\ntrees = 2000\npair_draws = 1000\n"
                   "[thresholds]\nz = 0\n")
    assert cli.run(["extinction", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_out_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SUPERGW_OUT", str(tmp_path / "env"))
    assert cli.run(["xi", "--law", "geometric:2"]) == 0
    assert (tmp_path / "env" / "report.json").exists()


def test_reports_are_byte_identical(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("[run]\nexperiment = pathwise-law\n[law]\nlaws = binary:0.25\n"
                   "[sampling]\nreplicas = 200\nk_grid = 10, 20\n")
    for d in ("a", "b"):
        cli.run(["pathwise-law", "--config", str(cfg), "--seed", "7", "--out", str(tmp_path / d)])
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    assert (tmp_path / "a" / "bundle.csv").read_bytes() == (tmp_path / "b" / "bundle.csv").read_bytes()


def test_config_ranges():
    with pytest.raises(ConfigError):
        load_config("[run]\nexperiment = xi\nseed = -1\n")
    with pytest.raises(ConfigError):
        load_config("[run]\nexperiment = xi\n[model]\nalpha = 2.5\n")
    with pytest.raises(ConfigError):
        load_config("[run]\nexperiment = nothing\n")
    with pytest.raises(ConfigError):
        load_config("[run]\nexperiment = xi\n", "k-tilde")
    cfg = load_config("[run]\nexperiment = xi\n[law]\nlaws = binary:0.2, power_law:alpha=1.5,kmin=3\n")
    assert cfg.get("law", "laws") == ["binary:0.2", "power_law:alpha=1.5,kmin=3"]


def test_parse_law_families():
    assert parse_law("binary:0.25").mean == pytest.approx(1.5)
    assert parse_law("geometric:2").mean == pytest.approx(2.0)
    child = parse_law("window_child:alpha=1.5,kmin=2,lambda=1,n=10000")
    assert child.mean > 1
    with pytest.raises(ConfigError):
        parse_law("power_law:alpha=1.5,bogus=1")
