"""Command-line surface: configs, artifacts, exit codes, determinism."""

import json
import subprocess
import sys

import pytest

from anosovlab import cli


def run(args):
    return cli.main([str(a) for a in args])


def read_json(path):
    return json.loads(path.read_text())


def test_enumerate_writes_counts_and_manifest(tmp_path):
    out = tmp_path / "enum"
    assert run(["enumerate", "--max-len", 4, "--out", out]) == 0
    summary = read_json(out / "summary.json")
    assert summary["counts"] == [8, 56, 392, 2736]
    assert summary["total_elements"] == 1 + 8 + 56 + 392 + 2736
    manifest = read_json(out / "manifest.json")
    assert manifest["command"] == "enumerate"
    assert manifest["config"]["max_len"] == 4
    assert "wall_seconds" in manifest
    csv_lines = (out / "sphere_counts.csv").read_text().strip().splitlines()
    assert len(csv_lines) == 5  # header + four levels


def test_summaries_are_byte_identical(tmp_path):
    outs = []
    for name, threads in (("a", 1), ("b", 3), ("c", 1)):
        out = tmp_path / name
        assert run(["enumerate", "--max-len", 4, "--threads", threads, "--out", out]) == 0
        outs.append((out / "summary.json").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_no_timing_keys_leak_into_summaries(tmp_path):
    out = tmp_path / "enum"
    run(["enumerate", "--max-len", 3, "--out", out])
    text = (out / "summary.json").read_text()
    for key in ("wall_time", "elapsed", "seconds", "timestamp"):
        assert f'"{key}"' not in text


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "enumerate", "max_len": 3}))
    out = tmp_path / "enum"
    assert run(["enumerate", "--config", cfg, "--max-len", 4, "--out", out]) == 0
    assert len(read_json(out / "summary.json")["counts"]) == 4


def test_unknown_config_key_is_a_config_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "enumerate", "bogus": 1}))
    assert run(["enumerate", "--config", cfg, "--out", tmp_path / "x"]) == 2
    assert "config error" in capsys.readouterr().err


def test_malformed_json_is_a_config_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert run(["enumerate", "--config", cfg, "--out", tmp_path / "x"]) == 2


def test_command_mismatch_is_a_config_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "entropy"}))
    assert run(["enumerate", "--config", cfg, "--out", tmp_path / "x"]) == 2


def test_unknown_family_is_a_config_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "gap", "rep": "septic"}))
    assert run(["gap", "--config", cfg, "--out", tmp_path / "x"]) == 2


def test_element_budget_exits_3(tmp_path, capsys):
    code = run(["enumerate", "--max-len", 7, "--budget-elements", 1000, "--out", tmp_path / "x"])
    assert code == 3
    assert "budget exhausted" in capsys.readouterr().err


def test_short_window_exits_4(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "entropy", "rep": "fuchsian", "max_len": 5}))
    assert run(["entropy", "--config", cfg, "--out", tmp_path / "x"]) == 4
    assert "check failed" in capsys.readouterr().err


def test_gap_run(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "gap", "rep": "sym2", "max_len": 4}))
    out = tmp_path / "gap"
    assert run(["gap", "--config", cfg, "--out", out]) == 0
    summary = read_json(out / "summary.json")
    assert summary["verdicts"] == ["uniform", "uniform"]
    assert (out / "gaps.csv").exists()


def test_entropy_run(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "entropy", "rep": "fuchsian", "functional": "alpha1"}))
    out = tmp_path / "entropy"
    assert run(["entropy", "--config", cfg, "--out", out]) == 0
    summary = read_json(out / "summary.json")
    assert abs(summary["estimate"]["h_hat"] - 1.0) < 0.15
    assert (out / "counting.csv").exists()
    assert (out / "shells.csv").exists()


def test_limitset_run(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "command": "limitset",
                "rep": "fuchsian",
                "sample_len": 5,
                "max_csv_rows": 500,
            }
        )
    )
    out = tmp_path / "ls"
    assert run(["limitset", "--config", cfg, "--out", out]) == 0
    summary = read_json(out / "summary.json")
    assert summary["samples_written"] == 500
    assert abs(summary["box_dimension"]["box_dimension"] - 1.0) < 0.15
    assert summary["lipschitz"]["verdict"] == "bounded"
    rows = (out / "samples.csv").read_text().strip().splitlines()
    assert len(rows) == 501


def test_verify_quick_profile(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "command": "verify",
                "trials": 40,
                "cover_points": 4000,
                "oracle_trials": 2,
            }
        )
    )
    out = tmp_path / "verify"
    assert run(["verify", "--config", cfg, "--out", out]) == 0
    summary = read_json(out / "summary.json")
    assert summary["passed"] is True
    assert summary["n_checks"] >= 20
    assert (out / "checks.csv").exists()


def test_module_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "anosovlab", "enumerate", "--max-len", "3", "--out", str(tmp_path / "e")],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert result.returncode == 0
    assert "ok: wrote" in result.stdout
