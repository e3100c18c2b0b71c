"""Configuration ingestion, file output, CLI verbs and exit codes."""

import json
import math

import numpy as np
import pytest

from dfsim import (
    ConfigError,
    QuenchSchedule,
    dfs_structure,
    dump_config,
    ground_state,
    integrate,
    load_config,
    run_experiment,
    write_timeseries,
)
from dfsim.cli import main
from dfsim.config import config_from_dict, config_to_dict


def _write(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_minimal_config_gets_defaults(tmp_path):
    path = _write(tmp_path, {"N": 5, "C": -5, "protocol": "quench", "mu_q": 0.96})
    config = load_config(path)
    assert config.detuning_ratio == 0.1
    assert config.gamma_c == 1.0
    assert config.samples == 1000
    assert config.resolved_dt == pytest.approx(1e-3)


def test_unknown_key_rejected(tmp_path):
    path = _write(tmp_path, {"N": 5, "C": 0, "protocol": "ramp", "beta": 0.1, "betta": 1})
    with pytest.raises(ConfigError, match="betta"):
        load_config(path)


def test_c_out_of_range_rejected(tmp_path):
    path = _write(tmp_path, {"N": 5, "C": -6, "protocol": "quench", "mu_q": 0.9, "t_final": 10})
    with pytest.raises(ConfigError, match="exceeds"):
        load_config(path)


def test_exactly_one_protocol_variant(tmp_path):
    path = _write(
        tmp_path,
        {"N": 5, "C": -5, "protocol": "quench", "mu_q": 0.9, "beta": 0.1, "t_final": 10},
    )
    with pytest.raises(ConfigError, match="exactly one protocol"):
        load_config(path)


def test_parse_error_carries_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"N": 5,\n  "C": -5,,}\n')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(path)


def test_shortcut_dt_default_and_tfinal(tmp_path):
    path = _write(
        tmp_path,
        {"N": 5, "C": -5, "protocol": "edge_shortcut", "beta": 1.0, "sign": -1},
    )
    config = load_config(path)
    assert config.resolved_t_final == pytest.approx(1.0)
    assert config.resolved_dt == pytest.approx(1e-5)


def test_edge_sign_consistency(tmp_path):
    path = _write(
        tmp_path,
        {"N": 5, "C": 5, "protocol": "edge_shortcut", "beta": 1.0, "sign": -1},
    )
    with pytest.raises(ConfigError, match="sign"):
        load_config(path)


def test_ramp_tfinal_must_match_beta(tmp_path):
    path = _write(
        tmp_path,
        {"N": 5, "C": 0, "protocol": "ramp", "beta": 0.01, "t_final": 90.0},
    )
    with pytest.raises(ConfigError, match="1/beta"):
        load_config(path)


def test_quench_requires_t_final_to_run(tmp_path):
    path = _write(tmp_path, {"N": 5, "C": -5, "protocol": "quench", "mu_q": 0.96})
    with pytest.raises(ConfigError, match="t_final"):
        load_config(path, mode="run")


def test_config_round_trip(tmp_path):
    config = config_from_dict(
        {
            "N": 4,
            "C": 0,
            "protocol": "ramp",
            "beta": 0.02,
            "samples": 77,
            "timeseries_path": "out.csv",
        }
    )
    path = tmp_path / "rt.json"
    dump_config(config, path)
    assert load_config(path) == config
    assert config_from_dict(config_to_dict(config)) == config


def test_physical_block_mapping(tmp_path):
    payload = {
        "N": 5,
        "C": -5,
        "protocol": "quench",
        "mu_q": 0.96,
        "t_final": 10.0,
        "physical": {
            "kappa": 2.0, "g": 1.0, "omega1_amp": 0.1, "omega2_amp": 0.1,
            "eta": 0.0, "delta_e": 100.0, "delta_c_prime": 0.2,
        },
    }
    config = load_config(_write(tmp_path, payload))
    assert config.detuning_ratio == pytest.approx(0.1)
    payload["gamma_c"] = 2.0
    with pytest.raises(ConfigError, match="derived"):
        load_config(_write(tmp_path, payload, "clash.json"))


# ---------------------------------------------------------------------------
# file output
# ---------------------------------------------------------------------------

def test_timeseries_header_and_determinism(tmp_path, basis5):
    schedule = QuenchSchedule(mu_q=0.9, c_index=-5)
    traj = integrate(ground_state(basis5), schedule, basis5, 2.0, 1e-3, samples=10)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_timeseries(traj, p1)
    traj2 = integrate(ground_state(basis5), schedule, basis5, 2.0, 1e-3, samples=10)
    write_timeseries(traj2, p2)
    text = p1.read_text()
    assert text.splitlines()[0] == "t_gamma,purity,overlap_current,overlap_target,drive_abs,trace_drift"
    assert text == p2.read_text()  # byte-identical across repeated runs


def test_timeseries_constant_run_purity_column(tmp_path, basis5):
    schedule = QuenchSchedule(mu_q=0.0, c_index=0)
    traj = integrate(ground_state(basis5), schedule, basis5, 1.0, 1e-3, samples=5)
    path = tmp_path / "const.csv"
    write_timeseries(traj, path)
    rows = path.read_text().splitlines()[1:]
    assert all(float(row.split(",")[1]) == 1.0 for row in rows)


def test_timeseries_refuses_empty(tmp_path):
    import dfsim

    empty = dfsim.TrajectoryRecord(
        times=np.array([]), purity=np.array([]), overlap_current=np.array([]),
        overlap_target=np.array([]), drive_abs=np.array([]), trace_drift=np.array([]),
        final=None,
    )
    with pytest.raises(ValueError):
        write_timeseries(empty, tmp_path / "empty.csv")


def test_run_experiment_writes_outputs(tmp_path):
    config = config_from_dict(
        {
            "N": 5, "C": -5, "protocol": "quench", "mu_q": 0.96, "t_final": 5.0,
            "samples": 20,
            "timeseries_path": str(tmp_path / "run.csv"),
            "final_state_path": str(tmp_path / "run.json"),
        }
    )
    summary = run_experiment(config)
    assert not summary.threshold_met  # five time units is far too short
    payload = json.loads((tmp_path / "run.json").read_text())
    assert payload["protocol"] == "quench"
    assert payload["target_members"] == ["(5,0,0)"]
    assert payload["populations"]["(5,0,0)"] == pytest.approx(summary.overlap_target)
    csv_rows = (tmp_path / "run.csv").read_text().splitlines()
    assert len(csv_rows) == 1 + 21  # header + samples (t=0 plus 20 windows)


# ---------------------------------------------------------------------------
# structure data and CLI
# ---------------------------------------------------------------------------

def test_dfs_structure_values():
    data = dfs_structure(5)
    dims = [data["dimensions"][str(c)] for c in range(-5, 6)]
    assert dims == [1, 1, 2, 2, 3, 3, 3, 2, 2, 1, 1]
    assert len(data["points"]) == 21
    assert all(p["C"] == p["k3"] - p["k1"] for p in data["points"])


def test_cli_run_exit_codes(tmp_path, capsys):
    ok = _write(
        tmp_path,
        {"N": 5, "C": -5, "protocol": "quench", "mu_q": 0.9, "t_final": 2.0, "samples": 5},
        "short.json",
    )
    assert main(["run", str(ok)]) == 1  # runs fine, threshold unmet
    assert "UNMET" in capsys.readouterr().out

    bad = _write(tmp_path, {"N": 5, "C": -9, "protocol": "quench", "mu_q": 0.9}, "bad.json")
    assert main(["run", str(bad)]) == 2

    absurd = _write(
        tmp_path,
        {"N": 5, "C": -5, "protocol": "quench", "mu_q": 0.96, "t_final": 50.0,
         "dt": 0.05, "samples": 25},
        "absurd.json",
    )
    assert main(["run", str(absurd)]) == 3  # dt way beyond stability


def test_cli_dfs_structure(tmp_path, capsys):
    out = tmp_path / "structure.json"
    assert main(["dfs-structure", "--n", "5", "--json", str(out)]) == 0
    capsys.readouterr()
    data = json.loads(out.read_text())
    assert data["N"] == 5


def test_cli_search_quench(tmp_path, capsys):
    cfg = _write(
        tmp_path,
        {"N": 5, "C": -5, "protocol": "quench", "mu_q": 0.96, "search_t_max": 420.0},
        "search.json",
    )
    assert main(["search", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "t_f=" in out
    t_f = float(out.split("t_f=")[1].split()[0])
    assert math.isclose(t_f, 318.0, rel_tol=0.05)
