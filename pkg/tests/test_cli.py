import json
import subprocess
import sys

import numpy as np
import pytest

from excursions.cli import run

FAST_IIA = ["--samples", "20000", "--reps", "3", "--grid-max", "120",
            "--grid-step", "0.02"]


def test_iia_zero_level_symmetry(tmp_path):
    out = tmp_path / "res.json"
    code = run(["iia", "--level", "0", "--seed", "7", "--out", str(out)] + FAST_IIA)
    assert code == 0
    res = json.loads(out.read_text())
    assert res["alpha"] == 0.5
    assert res["theta_plus"] == pytest.approx(res["theta_minus"], abs=0.02)
    assert res["seed"] == 7
    assert "config_hash" in res
    manifest = json.loads((tmp_path / "res.json.manifest.json").read_text())
    assert manifest["config_hash"] == res["config_hash"]
    assert manifest["config"]["level"] == 0.0
    assert "wall_clock_seconds" in manifest


def test_missing_level_usage_error(capsys):
    assert run(["iia"]) == 64
    assert run(["iia", "--level"]) == 64


def test_unknown_flag_usage_error():
    assert run(["iia", "--level", "0", "--frobnicate"]) == 64
    assert run(["not-a-command"]) == 64


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    capsys.readouterr()


def test_domain_error_exit_code(tmp_path):
    # unknown model name is a domain error: exit 1
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "brownian"}))
    code = run(["iia", "--level", "0", "--config", str(cfg)] + FAST_IIA)
    assert code == 1


def test_numerical_error_exit_code():
    # level above the monotonicity threshold: exit 2
    code = run(["iia", "--level", "1.5"] + FAST_IIA)
    assert code == 2


def test_determinism_byte_identical(tmp_path):
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    args = ["iia", "--level", "0.5", "--seed", "99"] + FAST_IIA
    assert run(args + ["--out", str(out1)]) == 0
    assert run(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_config_file_merging_and_flag_priority(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"samples": 20000, "reps": 3, "grid_max": 120.0,
                               "grid_step": 0.02, "seed": 5}))
    out1 = tmp_path / "c.json"
    assert run(["iia", "--level", "0", "--config", str(cfg),
                "--out", str(out1)]) == 0
    res = json.loads(out1.read_text())
    assert res["n_samples"] == 20000
    assert res["seed"] == 5
    # explicit flag wins over the config value
    out2 = tmp_path / "d.json"
    assert run(["iia", "--level", "0", "--config", str(cfg), "--seed", "6",
                "--out", str(out2)]) == 0
    assert json.loads(out2.read_text())["seed"] == 6


def test_iia_curve_and_sample_outputs(tmp_path):
    out = tmp_path / "res.json"
    cdf = tmp_path / "cdf.csv"
    samples = tmp_path / "samples"
    assert run(["iia", "--level", "0", "--seed", "1", "--out", str(out),
                "--cdf-csv", str(cdf), "--samples-csv", str(samples)]
               + FAST_IIA) == 0
    header, first = cdf.read_text().splitlines()[:2]
    assert header == "t,f_x,f_y"
    assert first.startswith("0.0,0.0,0.0")
    above = (tmp_path / "samples.above.csv").read_text().splitlines()
    assert above[0] == "length"
    assert float(above[1]) > 0


def test_switch_sim_csv(tmp_path):
    out = tmp_path / "sw.csv"
    assert run(["switch-sim", "--plus", "exp:1.0", "--minus", "exp:1.0",
                "--stationary", "--paths", "500", "--horizon", "4",
                "--seed", "3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("t,p_plus,se_p_plus")
    assert len(lines) == 52


def test_clipped_cov_zero_level_has_reference_column(tmp_path):
    out = tmp_path / "cc.csv"
    assert run(["clipped-cov", "--level", "0", "--t-max", "2",
                "--step", "0.5", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,value,arcsin_reference"
    first = [float(x) for x in lines[1].split(",")]
    assert first[1] == pytest.approx(1.0, abs=1e-8)


def test_slepian_sample_csv(tmp_path):
    out = tmp_path / "paths.csv"
    assert run(["slepian-sample", "--level", "1.0", "--grid-max", "2",
                "--grid-step", "0.5", "--paths", "3", "--seed", "2",
                "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,deterministic,slope_component,residual,total,replicate_id"
    # 3 replicates x 5 grid points
    assert len(lines) == 16
    row = lines[1].split(",")
    assert float(row[4]) == pytest.approx(1.0)  # total(0) = level


def test_persistency_subcommand(tmp_path):
    rng = np.random.default_rng(12)
    csv = tmp_path / "lengths.csv"
    csv.write_text("length\n" + "\n".join(
        repr(float(x)) for x in rng.exponential(2.0, 50_000)) + "\n")
    out = tmp_path / "fit.json"
    assert run(["persistency", "--samples", str(csv), "--reps", "5",
                "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert res["theta"] == pytest.approx(0.5, abs=0.02)
    assert res["n_samples"] == 50_000


def test_table1_small_scale(tmp_path, capsys):
    out = tmp_path / "t1.json"
    assert run(["table1", "--samples", "20000", "--reps", "3",
                "--grid-max", "120", "--grid-step", "0.02",
                "--levels", "0,1", "--seed", "1", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "theta+" in printed
    rows = json.loads(out.read_text())["rows"]
    assert [r["level"] for r in rows] == [0.0, 1.0]
    assert rows[0]["theta_plus"] == pytest.approx(0.1862, abs=0.02)


def test_gp_sim_small_scale(tmp_path):
    out = tmp_path / "gp.json"
    assert run(["gp-sim", "--level", "0", "--n-traj", "40", "--len", "8000",
                "--dt", "0.05", "--reps", "4", "--seed", "2",
                "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert res["theta_plus"] == pytest.approx(0.1885, abs=0.04)
    assert res["rice_rate"] == pytest.approx(0.1591549, abs=1e-6)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "excursions.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip()
