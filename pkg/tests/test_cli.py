"""CLI contract: exit codes, file schemas, manifests, determinism."""

import json
import os

import pytest

from twinmarket.cli import main
from twinmarket.config import (ConfigError, config_from_dict, config_to_dict,
                               load_config)

BASE_CONFIG = """\
[population]
n_agents = 60
kind = "reduced"

[markets]
theta = [-0.2, 0.2]

[bidask]
mu_ask = 9.5
sigma_ask = 1.0
mu_bid = 10.5
sigma_bid = 1.0

[learning]
beta = 3.0
r = 0.1

[run]
n_periods = 260
burn_in = 200
seed = 11
"""


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(BASE_CONFIG)
    return str(path)


def read(path):
    with open(path) as fh:
        return fh.read()


def test_config_round_trip(cfg_path):
    cfg = load_config(cfg_path)
    echo = config_to_dict(cfg)
    assert config_from_dict(echo) == cfg


def test_unknown_key_is_hard_error(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text(BASE_CONFIG + "\n[learning2]\nbeta = 1\n")
    with pytest.raises(ConfigError, match="learning2"):
        load_config(str(path))
    path.write_text(BASE_CONFIG.replace("r = 0.1", "rr = 0.1"))
    with pytest.raises(ConfigError, match="rr"):
        load_config(str(path))


def test_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(BASE_CONFIG.replace("r = 0.1", "typo_rate = 0.1"))
    rc = main(["simulate", "--config", str(path), "--runs", "1",
               "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "typo_rate" in capsys.readouterr().err


def test_zero_runs_usage_error(cfg_path, tmp_path, capsys):
    rc = main(["simulate", "--config", cfg_path, "--runs", "0",
               "--out", str(tmp_path / "o")])
    assert rc == 2


def test_simulate_outputs_and_determinism(cfg_path, tmp_path):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["simulate", "--config", cfg_path, "--runs", "2",
                 "--out", out1]) == 0
    assert main(["simulate", "--config", cfg_path, "--runs", "2",
                 "--out", out2]) == 0
    for name in ("attraction_samples.csv", "returns.csv", "summary.csv",
                 "delta_hist.csv"):
        assert read(os.path.join(out1, name)) == read(os.path.join(out2, name))
    manifest = json.loads(read(os.path.join(out1, "manifest.json")))
    assert manifest["generator"].startswith("numpy PCG64")
    assert {f["name"] for f in manifest["outputs"]} >= {
        "attraction_samples.csv", "returns.csv", "summary.csv"}
    # config echo reproduces the loaded config exactly
    assert config_from_dict(manifest["config"]) == load_config(cfg_path)
    # row counts in the manifest match the files
    for entry in manifest["outputs"]:
        body = read(os.path.join(out1, entry["name"])).strip().splitlines()
        assert len(body) - 1 == entry["rows"]


def test_simulate_csv_headers(cfg_path, tmp_path):
    out = str(tmp_path / "o")
    main(["simulate", "--config", cfg_path, "--runs", "1", "--out", out])
    assert read(os.path.join(out, "attraction_samples.csv")).splitlines()[0] \
        == "run,type_id,delta"
    assert read(os.path.join(out, "returns.csv")).splitlines()[0] \
        == "run,mean_return,trades_market1,trades_market2"
    assert read(os.path.join(out, "summary.csv")).splitlines()[0] \
        == "n_runs,window,binder,mean_return,se_return"


def test_fp_density_schema_and_modes(cfg_path, tmp_path):
    out = str(tmp_path / "fp")
    rc = main(["fp", "--config", cfg_path, "--beta", "2.222", "--r", "0.1",
               "--out", out])
    assert rc == 0
    lines = read(os.path.join(out, "density.csv")).splitlines()
    assert lines[0] == "delta,density_type1,density_type2"
    assert len(lines) > 1000
    state = read(os.path.join(out, "state.csv")).splitlines()
    assert state[0].startswith("beta,r,converged,iterations,d1,d2")
    assert state[1].split(",")[2] == "true"


def test_fp_bimodal_vs_unimodal(cfg_path, tmp_path):
    import numpy as np
    from twinmarket.stats import count_modes_1d
    for beta, want in (("6.667", 2), ("2.222", 1)):
        out = str(tmp_path / f"fp{want}")
        assert main(["fp", "--config", cfg_path, "--beta", beta,
                     "--r", "0.1", "--out", out]) == 0
        rows = read(os.path.join(out, "density.csv")).splitlines()[1:]
        dens = np.array([[float(v) for v in row.split(",")] for row in rows])
        for col in (1, 2):
            assert count_modes_1d(dens[:, col], mass_floor=0.02) == want


def test_fp_nonconvergence_exit_three(cfg_path, tmp_path):
    out = str(tmp_path / "fpnc")
    rc = main(["fp", "--config", cfg_path, "--beta", "6.667", "--r", "0.1",
               "--max-iter", "2", "--out", out])
    assert rc == 3
    assert os.path.exists(os.path.join(out, "trace.csv"))


def test_fp_different_starts_find_different_census_solutions(cfg_path, tmp_path):
    # default start settles on the symmetric branch; a start next to one of
    # the asymmetric census solutions documents that branch instead
    vals = {}
    for name, init in (("a", "1,1"), ("b", "1.4,1.0")):
        out = str(tmp_path / name)
        assert main(["fp", "--config", cfg_path, "--beta", "10", "--r", "0.02",
                     "--init-d", init, "--out", out]) == 0
        state = read(os.path.join(out, "state.csv")).splitlines()[1]
        vals[name] = tuple(float(x) for x in state.split(",")[4:6])
    assert abs(vals["a"][0] - vals["b"][0]) > 1e-3
    assert vals["a"][0] * vals["a"][1] == pytest.approx(1.0, abs=1e-5)


def test_analyze_nash(cfg_path, tmp_path):
    out = str(tmp_path / "nash")
    assert main(["analyze", "nash", "--config", cfg_path, "--out", out]) == 0
    lines = read(os.path.join(out, "nash.csv")).splitlines()
    header = lines[0].split(",")
    row = dict(zip(header, lines[1].split(",")))
    assert row["consistent"] == "true"
    returns = [float(row[k]) for k in ("r_b1", "r_s1", "r_b2", "r_s2")]
    assert max(returns) - min(returns) < 1e-9
    assert float(row["common_return"]) == pytest.approx(0.567, abs=1e-3)


def test_analyze_census_single_cell(cfg_path, tmp_path):
    out = str(tmp_path / "census")
    assert main(["analyze", "census", "--config", cfg_path, "--r", "0.1",
                 "--beta", "10", "--method", "multistart", "--out", out]) == 0
    lines = read(os.path.join(out, "census.csv")).splitlines()
    assert lines[0] == "d1,d2,class,peak_masses_type1,peak_masses_type2"
    assert len(lines) == 2
    assert lines[1].split(",")[2] == "S"


def test_analyze_threshold(cfg_path, tmp_path):
    out = str(tmp_path / "th")
    assert main(["analyze", "threshold", "--config", cfg_path,
                 "--model", "reduced", "--out", out]) == 0
    lines = read(os.path.join(out, "threshold.csv")).splitlines()
    assert lines[0] == "model,beta_s,rel_tol"
    assert float(lines[1].split(",")[1]) == pytest.approx(3.55, abs=0.05)


def test_analyze_returns(cfg_path, tmp_path):
    out = str(tmp_path / "ret")
    assert main(["analyze", "returns", "--config", cfg_path,
                 "--betas", "2.0,5.0", "--r-list", "0.1", "--out", out]) == 0
    lines = read(os.path.join(out, "returns.csv")).splitlines()
    assert lines[0] == ("r,beta,population_return,baseline_return,"
                        "nash_return,binder,converged")
    assert len(lines) == 3


def test_analyze_autocov(cfg_path, tmp_path):
    out = str(tmp_path / "ac")
    assert main(["analyze", "autocov", "--config", cfg_path,
                 "--mode", "central", "--n-lags", "10", "--out", out]) == 0
    lines = read(os.path.join(out, "autocov.csv")).splitlines()
    assert lines[0] == "lag,t_rescaled,value,mode"
    assert len(lines) > 5
