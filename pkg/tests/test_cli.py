import json
import subprocess
import sys

import pytest

from paralab.cli import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, main


def test_list(capsys):
    assert main(["list"]) == EXIT_PASS
    out = capsys.readouterr().out
    assert "sharpness" in out and "fu-ren (needs --seed)" in out


def test_pass_writes_outputs(tmp_path, capsys):
    code = main(["fourier-decay", "--set", "R_levels=[4,5,6]", "--out", str(tmp_path)])
    assert code == EXIT_PASS
    for ext in ("csv", "json", "plotdata"):
        assert (tmp_path / f"fourier-decay.{ext}").exists()
    assert capsys.readouterr().out.startswith("PASS ")
    rec = json.loads((tmp_path / "fourier-decay.json").read_text())
    assert rec["params"]["R_levels"] == [4, 5, 6]


def test_verdict_failure_exit_code(tmp_path, capsys):
    code = main(["smoothing", "--set", "levels=[2,3,4]", "--set", "tolerance=-5", "--out", str(tmp_path)])
    assert code == EXIT_FAIL
    assert "FAIL" in capsys.readouterr().out
    assert (tmp_path / "smoothing.csv").exists()


@pytest.mark.parametrize("argv, message", [
    (["nope"], "unknown pipeline"),
    (["fu-ren"], "pass a seed"),
    (["sharpness", "--set", "colour=red"], "unknown parameter"),
    (["sharpness", "--set", "broken"], "key=value"),
])
def test_errors_exit_one(tmp_path, capsys, argv, message):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_ERROR
    assert message in capsys.readouterr().err


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"samples": 1000, "anchors": 5, "transfer_anchors": 2}))
    assert main(["psi-audit", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path)]) == EXIT_PASS
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert main(["psi-audit", "--config", str(bad), "--seed", "1", "--out", str(tmp_path)]) == EXIT_ERROR


def test_console_module_runs(tmp_path):
    args = [sys.executable, "-m", "paralab.cli", "psi-audit", "--seed", "2", "--set", "samples=1000",
            "--set", "anchors=5", "--set", "transfer_anchors=2", "--out", str(tmp_path)]
    first = subprocess.run(args, capture_output=True, text=True)
    assert first.returncode == 0, first.stderr
    csv1 = (tmp_path / "psi-audit.csv").read_bytes()
    second = subprocess.run(args, capture_output=True, text=True)
    assert second.returncode == 0
    assert (tmp_path / "psi-audit.csv").read_bytes() == csv1
