import json
import os
import subprocess
import sys

import pytest

from fracell.cli import ConfigError, RunConfig, main, parse_config_file, run


def test_run_solve_writes_artifacts(tmp_path):
    cfg = RunConfig("solve", {"nodes": "34", "s": "0.5"})
    result = run(cfg, out_dir=tmp_path)
    assert result.passed
    for name in ("report.json", "solution.csv", "problem.json", "spectrum.csv", "spectrum.json"):
        assert (tmp_path / name).exists()
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["pass"] is True
    assert report["version"]
    assert len(report["config_sha256"]) == 64


def test_reports_are_byte_identical(tmp_path):
    params = {"probe": "interior", "alpha": "0.2", "s": "0.25", "seed": "11"}
    a = tmp_path / "a"
    b = tmp_path / "b"
    run(RunConfig("probe", dict(params)), out_dir=a)
    run(RunConfig("probe", dict(params)), out_dir=b)
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_config_file_and_override(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("# halfline case\ns = 0.25\nT = 16\n", encoding="utf-8")
    parsed = parse_config_file(config)
    assert parsed == {"s": "0.25", "T": "16"}
    rc = main(
        [
            "halfline",
            "--config",
            str(config),
            "--out",
            str(tmp_path / "o"),
            "--s=0.75",  # override the file value
        ]
    )
    assert rc == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["config"]["s"] == "0.75"
    assert (tmp_path / "o" / "halfline.csv").exists()


def test_invalid_key_names_offender(tmp_path, capsys):
    rc = main(["solve", "--nodes=abc", f"--out={tmp_path}"])
    assert rc == 2
    err = capsys.readouterr().err
    assert "nodes" in err


def test_unknown_command_rejected():
    with pytest.raises(ConfigError):
        RunConfig("frobnicate", {})


def test_failed_assertion_gives_nonzero_exit(tmp_path):
    # an impossible tolerance forces a clean assertion failure
    rc = main(
        [
            "extension",
            "--nodes=34",
            "--layers=16",
            "--s=0.5",
            "--dtn_tol=1e-12",
            f"--out={tmp_path}",
        ]
    )
    assert rc == 1
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["pass"] is False


def test_neumann_incompatible_rhs_fails_cleanly(tmp_path):
    rc = main(["solve", "--bc=neumann", "--rhs=ones", "--nodes=34", f"--out={tmp_path}"])
    assert rc == 1
    report = json.loads((tmp_path / "report.json").read_text())
    assert not report["pass"]
    assert "mean" in report["results"]["error"]


def test_converge_respects_thread_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("FRACELL_THREADS", "2")
    cfg = RunConfig("converge", {"nodes": "34", "layers": "16", "levels": "2", "s": "0.5"})
    result = run(cfg, out_dir=tmp_path)
    assert result.passed
    data = json.loads((tmp_path / "convergence.json").read_text())
    assert len(data["dtn_errors"]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "fracell.cli", "halfline", "--s=0.25", f"--out={tmp_path}"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "PASS" in proc.stdout
