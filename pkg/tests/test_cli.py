from __future__ import annotations

import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

BASE_CONFIG = {
    "model": {"x": 100.0, "r": 0.05, "sigma": 0.2, "T": 1.0,
              "lam": 0.3, "alpha": 1.0, "risk_neutral": True,
              "jump_marks": {"type": "normal", "mean": -0.05, "stddev": 0.1}},
    "payoff": {"kind": "call", "strike": 100.0, "style": "european"},
    "run": {"n_paths": 2000, "grid_steps": 4, "master_seed": 12},
}

COLUMNS = ["style", "greek", "value", "std_error", "ci_low", "ci_high",
           "n_paths", "grid_steps", "seed", "variant", "wall_time_ms"]


def _write_config(tmp_path: Path, config: dict, name: str = "job.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return path


def _run(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "levy_greeks.cli", *args],
                          capture_output=True, text=True)


def _rows(text: str) -> list[dict]:
    return list(csv.DictReader(text.splitlines()))


def test_price_emits_one_row_with_schema(tmp_path):
    cfg = _write_config(tmp_path, BASE_CONFIG)
    res = _run("price", "--config", str(cfg))
    assert res.returncode == 0, res.stderr
    lines = res.stdout.splitlines()
    assert lines[0] == ",".join(COLUMNS)
    rows = _rows(res.stdout)
    assert len(rows) == 1
    row = rows[0]
    assert row["style"] == "european"
    assert row["greek"] == "price"
    assert row["n_paths"] == "2000"
    assert row["grid_steps"] == "4"
    assert row["seed"] == "12"
    assert row["variant"] == "derived"
    assert row["wall_time_ms"] == ""
    value = float(row["value"])
    half = float(row["ci_high"]) - value
    assert half == pytest.approx(value - float(row["ci_low"]), rel=1e-12)
    assert float(row["std_error"]) > 0.0


def test_greeks_defaults_to_all_six_in_order(tmp_path):
    cfg = _write_config(tmp_path, BASE_CONFIG)
    res = _run("greeks", "--config", str(cfg))
    assert res.returncode == 0, res.stderr
    rows = _rows(res.stdout)
    assert [r["greek"] for r in rows] == [
        "delta", "vega", "rho", "theta", "gamma", "alpha_greek"]


def test_greeks_respects_requested_subset_and_flags(tmp_path):
    config = dict(BASE_CONFIG, greeks=["vega", "delta"])
    cfg = _write_config(tmp_path, config)
    res = _run("greeks", "--config", str(cfg), "--paths", "1000",
               "--seed", "77", "--gamma-variant", "appendix_b")
    assert res.returncode == 0, res.stderr
    rows = _rows(res.stdout)
    assert [r["greek"] for r in rows] == ["vega", "delta"]
    assert all(r["n_paths"] == "1000" for r in rows)
    assert all(r["seed"] == "77" for r in rows)
    assert all(r["variant"] == "appendix_b" for r in rows)


def test_output_is_byte_deterministic(tmp_path):
    cfg = _write_config(tmp_path, BASE_CONFIG)
    first = _run("greeks", "--config", str(cfg))
    second = _run("greeks", "--config", str(cfg))
    assert first.stdout == second.stdout
    assert first.stdout != ""


def test_worker_override_keeps_bytes(tmp_path):
    cfg = _write_config(tmp_path, BASE_CONFIG)
    one = _run("greeks", "--config", str(cfg), "--workers", "1")
    two = _run("greeks", "--config", str(cfg), "--workers", "2")
    assert one.stdout == two.stdout


def test_theta_sign_flag_flips_reported_sign(tmp_path):
    config = dict(BASE_CONFIG, greeks=["theta"])
    cfg = _write_config(tmp_path, config)
    decay = _rows(_run("greeks", "--config", str(cfg)).stdout)[0]
    maturity = _rows(_run("greeks", "--config", str(cfg),
                          "--theta-sign", "maturity").stdout)[0]
    assert float(maturity["value"]) == -float(decay["value"])
    assert float(maturity["ci_low"]) == -float(decay["ci_high"])
    assert float(maturity["ci_high"]) == -float(decay["ci_low"])
    assert maturity["std_error"] == decay["std_error"]


def test_json_format_mirrors_csv_fields(tmp_path):
    config = dict(BASE_CONFIG, greeks=["delta"], output="json")
    cfg = _write_config(tmp_path, config)
    res = _run("greeks", "--config", str(cfg))
    assert res.returncode == 0, res.stderr
    payload = json.loads(res.stdout)
    assert list(payload) == ["rows"]
    row = payload["rows"][0]
    assert list(row) == COLUMNS
    assert row["wall_time_ms"] is None
    assert isinstance(row["value"], float)


def test_compare_adds_reference_columns_and_figure(tmp_path):
    config = dict(BASE_CONFIG, greeks=["delta", "vega"])
    config["run"] = dict(config["run"], n_paths=1500)
    cfg = _write_config(tmp_path, config)
    out = tmp_path / "cmp.csv"
    res = _run("compare", "--config", str(cfg), "--out", str(out), "--timing")
    assert res.returncode == 0, res.stderr
    rows = _rows(out.read_text())
    header = out.read_text().splitlines()[0]
    assert header == ",".join(COLUMNS + ["fd_value", "fd_std_error", "z_score"])
    for row in rows:
        assert row["fd_value"] != ""
        assert abs(float(row["z_score"])) < 50.0
        assert row["wall_time_ms"] != ""
    assert (tmp_path / "cmp_zscores.png").exists()


def test_no_plot_suppresses_figure(tmp_path):
    config = dict(BASE_CONFIG, greeks=["delta"])
    config["run"] = dict(config["run"], n_paths=500)
    cfg = _write_config(tmp_path, config)
    out = tmp_path / "cmp.csv"
    res = _run("compare", "--config", str(cfg), "--out", str(out), "--no-plot")
    assert res.returncode == 0, res.stderr
    assert out.exists()
    assert not (tmp_path / "cmp_zscores.png").exists()


def test_convergence_sweeps_grids_and_renders_figure(tmp_path):
    config = dict(BASE_CONFIG, greeks=["delta"])
    config["convergence"] = {"paths_grid": [500, 2000], "steps_grid": [2, 8]}
    cfg = _write_config(tmp_path, config)
    out = tmp_path / "conv.csv"
    res = _run("convergence", "--config", str(cfg), "--out", str(out))
    assert res.returncode == 0, res.stderr
    rows = _rows(out.read_text())
    assert len(rows) == 8  # 2 path counts x 2 step counts x (price, delta)
    seen = {(r["greek"], r["n_paths"], r["grid_steps"]) for r in rows}
    assert ("price", "500", "2") in seen
    assert ("delta", "2000", "8") in seen
    assert (tmp_path / "conv_convergence.png").exists()


def test_convergence_requires_its_section(tmp_path):
    cfg = _write_config(tmp_path, BASE_CONFIG)
    res = _run("convergence", "--config", str(cfg))
    assert res.returncode == 2
    assert "convergence" in res.stderr


def test_dump_paths_writes_node_table(tmp_path):
    cfg = _write_config(tmp_path, BASE_CONFIG)
    dump = tmp_path / "paths.csv"
    res = _run("price", "--config", str(cfg), "--dump-paths", str(dump),
               "--dump-limit", "3")
    assert res.returncode == 0, res.stderr
    rows = _rows(dump.read_text())
    header = dump.read_text().splitlines()[0]
    assert header == "path_id,t,W,X_left,X_right,X2"
    ids = sorted({int(r["path_id"]) for r in rows})
    assert ids == [0, 1, 2]
    first = [r for r in rows if r["path_id"] == "0"]
    assert float(first[0]["t"]) == 0.0
    assert float(first[0]["W"]) == 0.0
    assert float(first[0]["X_left"]) == 100.0
    assert float(first[-1]["t"]) == 1.0


def test_missing_field_is_named(tmp_path):
    config = json.loads(json.dumps(BASE_CONFIG))
    del config["model"]["sigma"]
    cfg = _write_config(tmp_path, config)
    res = _run("price", "--config", str(cfg))
    assert res.returncode == 2
    assert "model.sigma" in res.stderr
    assert res.stdout == ""


def test_unknown_key_is_named(tmp_path):
    config = json.loads(json.dumps(BASE_CONFIG))
    config["run"]["n_step"] = 4
    cfg = _write_config(tmp_path, config)
    res = _run("price", "--config", str(cfg))
    assert res.returncode == 2
    assert "run.n_step" in res.stderr


def test_invalid_value_is_reported_with_exit_2(tmp_path):
    config = json.loads(json.dumps(BASE_CONFIG))
    config["model"]["sigma"] = -0.2
    cfg = _write_config(tmp_path, config)
    res = _run("price", "--config", str(cfg))
    assert res.returncode == 2
    assert "sigma" in res.stderr


def test_risk_neutral_conflicts_with_explicit_drift(tmp_path):
    config = json.loads(json.dumps(BASE_CONFIG))
    config["model"]["gamma_tilde"] = 0.01
    cfg = _write_config(tmp_path, config)
    res = _run("price", "--config", str(cfg))
    assert res.returncode == 2
    assert "gamma_tilde" in res.stderr and "risk_neutral" in res.stderr


def test_malformed_json_is_a_config_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    res = _run("price", "--config", str(path))
    assert res.returncode == 2
    assert "JSON" in res.stderr


def test_out_flag_beats_config_output_path(tmp_path):
    flagged = tmp_path / "flag.csv"
    configured = tmp_path / "config.csv"
    config = dict(BASE_CONFIG, output_path=str(configured))
    cfg = _write_config(tmp_path, config)
    res = _run("price", "--config", str(cfg), "--out", str(flagged))
    assert res.returncode == 0, res.stderr
    assert flagged.exists()
    assert not configured.exists()
    assert res.stdout == ""
