import json
import os

import pytest
from click.testing import CliRunner

from quenchlab.cli import (
    apply_override,
    load_config,
    main,
    run_job,
    validate_config,
)


def _base_config(**extra):
    cfg = {
        "job": "distance",
        "model_initial": {"family": "xy", "gamma": 0.5, "h": 0.2},
        "model_final": {"family": "xy", "gamma": 0.5, "h": 0.8},
        "grid": {"mode": "thermodynamic", "n_points": 128},
        "subsets": [[0], [0, 1]],
        "time": {"t_max": 0.5, "dt": 0.25},
        "R": 40,
        "delta_R": 10,
        "threshold": 1e-9,
        "workers": 1,
    }
    cfg.update(extra)
    return cfg


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


# ------------------------------------------------------------------- config

def test_apply_override_paths():
    raw = {"time": {"dt": 0.1}}
    apply_override(raw, "time.dt=0.5")
    apply_override(raw, "model_final.h=1.2")
    apply_override(raw, "grid.rule=midpoint")
    assert raw["time"]["dt"] == 0.5
    assert raw["model_final"]["h"] == 1.2
    assert raw["grid"]["rule"] == "midpoint"
    with pytest.raises(ValueError):
        apply_override(raw, "no-equals-sign")


def test_validate_config_names_fields():
    cfg = _base_config()
    cfg["time"]["dt"] = 0
    errs, _ = validate_config(cfg)
    assert any(e.startswith("time.dt") for e in errs)

    cfg = _base_config(R=2, subsets=[[0, 1, 2]])
    errs, _ = validate_config(cfg)
    assert any("R" in e and "too small" in e for e in errs)

    cfg = _base_config(model_initial={"family": "zzz"})
    errs, _ = validate_config(cfg)
    assert any(e.startswith("model_initial") for e in errs)

    cfg = _base_config(job="tau_sweep")
    errs, _ = validate_config(cfg)
    assert any(e.startswith("sweep") for e in errs)

    errs, _ = validate_config(_base_config())
    assert errs == []


def test_validate_warns_on_large_cluster_subsets():
    cfg = _base_config(
        model_initial={"family": "cluster", "cluster_size": 1, "phi": 1.1},
        model_final={"family": "cluster", "cluster_size": 1, "phi": 1.3},
        subsets=[[0, 1, 2]],
    )
    errs, warns = validate_config(cfg)
    assert errs == []
    assert any("N+2" in w for w in warns)


def test_disordered_initial_state_rejected():
    cfg = _base_config(model_initial={"family": "xy", "gamma": 0.5, "h": 1.5})
    errs, _ = validate_config(cfg)
    assert any("ordered" in e for e in errs)


# --------------------------------------------------------------------- jobs

def test_distance_job_writes_files(tmp_path):
    out = str(tmp_path / "out")
    code = run_job(_base_config(output_dir=out))
    assert code == 0
    lines = open(os.path.join(out, "distance.csv")).read().strip().split("\n")
    assert lines[0] == "t,S0,S0-1"
    assert len(lines) == 4  # t = 0, 0.25, 0.5
    manifest = json.load(open(os.path.join(out, "run_manifest.json")))
    assert manifest["status"] == "ok"
    assert manifest["t_star"] == float("inf")
    assert manifest["grid_resolution"] == 128


def test_distance_determinism_across_workers(tmp_path):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert run_job(_base_config(output_dir=out1, workers=1)) == 0
    assert run_job(_base_config(output_dir=out2, workers=2)) == 0
    a = open(os.path.join(out1, "distance.csv")).read()
    b = open(os.path.join(out2, "distance.csv")).read()
    assert a == b


def test_distance_clipping_exit_code(tmp_path):
    cfg = _base_config(
        model_initial={"family": "xy", "gamma": 0.8, "h": 0.2},
        model_final={"family": "xy", "gamma": 0.8, "h": 0.8},
        grid={"mode": "thermodynamic", "n_points": 512},
        subsets=[[0]],
        time={"t_max": 8.0, "dt": 0.5},
        R=20,
        output_dir=str(tmp_path / "clip"),
    )
    code = run_job(dict(cfg))
    assert code == 3
    manifest = json.load(open(tmp_path / "clip" / "run_manifest.json"))
    assert manifest["status"] == "clipped"
    assert manifest["rows_clipped"] > 0
    lines = open(tmp_path / "clip" / "distance.csv").read().strip().split("\n")
    assert len(lines) - 1 + manifest["rows_clipped"] == 17

    cfg2 = dict(cfg, allow_unconverged=True, output_dir=str(tmp_path / "full"))
    assert run_job(cfg2) == 0
    lines = open(tmp_path / "full" / "distance.csv").read().strip().split("\n")
    assert lines[0].endswith(",past_horizon")
    assert len(lines) == 18
    assert lines[-1].endswith(",1")


def test_correlators_job(tmp_path):
    out = str(tmp_path / "corr")
    cfg = _base_config(job="correlators", r_max=3, output_dir=out)
    assert run_job(cfg) == 0
    lines = open(os.path.join(out, "correlators.csv")).read().strip().split("\n")
    assert lines[0] == "t,r,f_re,f_im,g,h_re,h_im"
    assert len(lines) == 1 + 3 * 7  # 3 times, 7 separations each


def test_oracle_job(tmp_path):
    out = str(tmp_path / "oracle")
    cfg = _base_config(
        job="oracle_compare",
        grid={"mode": "finite", "n_sites": 8},
        subsets=[[0], [0, 1]],
        oracle={"n_sites": 8, "times": [0.5], "R_values": [2], "tolerance": 1e-8},
        output_dir=out,
    )
    assert run_job(cfg) == 0
    report = json.load(open(os.path.join(out, "oracle_report.json")))
    assert report["passed"]
    assert report["max_deviation"] < 1e-10


def test_runtime_failure_exit_code(tmp_path):
    # oracle tolerance impossible to beat -> runtime failure path
    out = str(tmp_path / "fail")
    cfg = _base_config(
        job="oracle_compare",
        grid={"mode": "finite", "n_sites": 8},
        subsets=[[0]],
        oracle={"n_sites": 8, "times": [0.5], "R_values": [2], "tolerance": 1e-30},
        output_dir=out,
    )
    assert run_job(cfg) == 2
    manifest = json.load(open(os.path.join(out, "run_manifest.json")))
    assert manifest["status"] == "failed"


# ---------------------------------------------------------------- cli layer

def test_cli_validate_command(tmp_path):
    runner = CliRunner()
    path = _write(tmp_path, _base_config())
    res = runner.invoke(main, ["validate", path])
    assert res.exit_code == 0
    assert "config ok" in res.output

    bad = _base_config()
    bad["time"]["dt"] = 0
    res = runner.invoke(main, ["validate", _write(tmp_path, bad, "bad.json")])
    assert res.exit_code == 1
    assert "time.dt" in res.output


def test_cli_run_with_overrides_and_env(tmp_path, monkeypatch):
    runner = CliRunner()
    out = str(tmp_path / "envout")
    monkeypatch.setenv("QUENCHLAB_OUTDIR", out)
    path = _write(tmp_path, _base_config(output_dir=str(tmp_path / "ignored")))
    res = runner.invoke(main, ["run", path, "--override", "time.t_max=0.25"])
    assert res.exit_code == 0
    lines = open(os.path.join(out, "distance.csv")).read().strip().split("\n")
    assert len(lines) == 3  # t = 0, 0.25
    assert not os.path.exists(str(tmp_path / "ignored"))


def test_cli_compare_oracle_command(tmp_path):
    runner = CliRunner()
    cfg = _base_config(
        grid={"mode": "finite", "n_sites": 8},
        subsets=[[0]],
        oracle={"n_sites": 8, "times": [0.25], "R_values": [2], "tolerance": 1e-8},
        output_dir=str(tmp_path / "cmp"),
    )
    res = runner.invoke(main, ["compare-oracle", _write(tmp_path, cfg)])
    assert res.exit_code == 0
    assert "pass" in res.output


def test_load_config_rejects_non_object(tmp_path):
    path = tmp_path / "arr.json"
    path.write_text("[1, 2]")
    with pytest.raises(ValueError):
        load_config(str(path))
