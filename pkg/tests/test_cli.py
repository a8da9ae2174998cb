import csv
import json
import subprocess
import sys

import pytest

from rggent.cli import SUBCOMMANDS, main, sample_size


def run(tmp_path, *args, env=None):
    return subprocess.run([sys.executable, "-m", "rggent", *args], cwd=tmp_path, capture_output=True, text=True,
                          env=env)


def test_sample_size_parsing():
    assert sample_size("1e7") == 10_000_000
    assert sample_size("250") == 250
    for bad in ("0", "-5", "1.5", "abc", "inf"):
        with pytest.raises(Exception):
            sample_size(bad)


def test_figure1_csv(tmp_path):
    out = tmp_path / "f.csv"
    assert main(["figure1", "--grid", "0.01", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["r", "limit"]
    assert len(rows) == 100
    table = dict(rows[1:])
    assert table["0.750000"] == "0.500000"
    assert table["0.300000"] == "1.000000"
    for r, v in rows[1:]:
        assert v == f"{min(1.0, 2 * (1 - float(r))):.6f}"
    assert json.loads((tmp_path / "f.csv.manifest.json").read_text())["status"] == "ok"


def test_entropy_end_to_end(tmp_path):
    out = tmp_path / "e.json"
    assert main(["entropy", "--m", "5", "--d", "1", "--domain", "cube", "--r", "0.3", "--samples", "2e5",
                 "--seed", "42", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert {"plug_in", "miller_madow", "lower_bound", "upper_bounds"} <= set(data)
    h = data["plug_in"]["bits"]
    assert data["lower_bound"]["bits"] - 4 * data["lower_bound"]["std_error"] <= h
    assert h <= data["upper_bounds"]["count_bits"]
    assert data["miller_madow"]["bits"] >= h


def test_same_config_twice_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["census", "--m", "4", "--d", "2", "--r", "0.4", "--samples", "5e4", "--seed", "3"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("RGGENT_SEED", "17")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["boolean", "--d", "1", "--r", "0.2", "--samples", "2e3", "--ells", "2,4", "--out", str(a)]) == 0
    assert main(["boolean", "--d", "1", "--r", "0.2", "--samples", "2e3", "--ells", "2,4", "--seed", "17",
                 "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("args", [
    ["lowerbound", "--m", "4", "--d", "2", "--domain", "torus", "--r", "0.2", "--inner", "1e4"],
    ["bounds", "--m", "6", "--d", "2", "--r", "1.3", "--samples", "1e5"],
    ["census", "--m", "3", "--r", "0.3", "--samples", "1e4"],
    ["volumes", "--d", "3", "--r", "0.2", "--samples", "1e3", "--points", "4"],
    ["orderstats", "--m", "3", "--r", "0.25", "--samples", "1e4"],
    ["boolean", "--d", "2", "--r", "0.2", "--samples", "1e3"],
    ["gammacheck", "--K", "1", "--s0", "0.25", "--m", "100", "--d", "1"],
])
def test_subcommands_write_outputs(tmp_path, args):
    out = tmp_path / "o"
    assert main(args + ["--out", str(out)]) == 0
    assert out.stat().st_size > 0
    manifest = json.loads((tmp_path / "o.manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert set(manifest["versions"]) >= {"numpy", "scipy", "python"}


def test_all_subcommands_registered(tmp_path):
    proc = run(tmp_path, "--help")
    for name in SUBCOMMANDS:
        assert name in proc.stdout


def test_usage_errors_exit_nonzero(tmp_path):
    proc = run(tmp_path, "entropy", "--bogus")
    assert proc.returncode != 0
    assert (tmp_path / "rggent.manifest.json").exists()
    out = tmp_path / "c.csv"
    assert main(["census", "--format", "csv", "--out", str(out)]) == 2
    assert json.loads((tmp_path / "c.csv.manifest.json").read_text())["status"] == "usage_error"
    assert main(["entropy", "--workers", "0", "--out", str(tmp_path / "w.json")]) == 2


def test_numeric_failure_writes_diagnostic(tmp_path):
    out = tmp_path / "b.json"
    assert main(["bounds", "--m", "5", "--r", "2", "--out", str(out)]) == 1
    diag = json.loads(out.read_text())
    assert diag["pass"] is False and diag["check"] == "bounds"
    assert json.loads((tmp_path / "b.json.manifest.json").read_text())["status"] == "numeric_failure"


def test_failed_check_exits_nonzero(tmp_path):
    out = tmp_path / "g.json"
    assert main(["gammacheck", "--K", "2", "--s0", "0.25", "--m", "100", "--d", "1", "--out", str(out)]) == 1
    data = json.loads(out.read_text())
    assert data["verdict"]["pass"] is False
    assert data["verdict_Km_form"]["pass"] is True


def test_verify_all_subset(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify-all", "--only", "10", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["pass"] is True
    assert data["criteria"][0]["criterion"] == 10
    for v in data["criteria"][0]["verdicts"]:
        assert set(v) == {"check", "statistic", "bound", "sigma", "pass"}
    assert main(["verify-all", "--only", "9", "--out", str(tmp_path / "v9.json")]) == 1
