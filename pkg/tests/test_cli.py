"""Command-line interface: exit codes, output lines, error categories."""
import subprocess
import sys

import pytest

from prestrain_plate.cli import main

LIMIT_CONFIG = """
[prestrain]
gamma = 3.0

[prestrain.B]
kind = "polynomial"

[[prestrain.B.params.terms]]
powers = [0, 2]
matrix = [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]

[[prestrain.B.params.terms]]
powers = [2, 0]
matrix = [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]

[grid]
n1 = 17
n2 = 17
m = 2
"""

RECOVERY_CONFIG = """
[prestrain]
gamma = 3.0

[displacement]
kind = "trig_product"

[[displacement.params.terms]]
amplitude = 1.0
kx = 3.141592653589793
ky = 3.141592653589793

[grid]
n1 = 24
n2 = 24
m = 3

[sweep]
h = [0.25, 0.125, 0.0625]
"""


def _config(tmp_path, text, name="exp.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_recovery_sweep_command(tmp_path, capsys):
    cfg = _config(tmp_path, RECOVERY_CONFIG)
    out = tmp_path / "out"
    assert main(["recovery-sweep", "--config", cfg, "--out", str(out)]) == 0
    assert "recovery sweep done" in capsys.readouterr().out
    assert (out / "curve.csv").exists()


def test_limit_min_command(tmp_path, capsys):
    cfg = _config(tmp_path, LIMIT_CONFIG)
    out = tmp_path / "out"
    assert main(["limit-min", "--config", cfg, "--out", str(out)]) == 0
    assert "bending minimum" in capsys.readouterr().out
    assert "method: cg" in (out / "summary.txt").read_text()


def test_limit_min_direct_solve(tmp_path):
    cfg = _config(tmp_path, LIMIT_CONFIG)
    out = tmp_path / "out"
    assert main(["limit-min", "--config", cfg, "--out", str(out),
                 "--direct-solve"]) == 0
    assert "method: direct" in (out / "summary.txt").read_text()


def test_diagnostics_command(tmp_path, capsys):
    cfg = _config(tmp_path, LIMIT_CONFIG)
    out = tmp_path / "out"
    assert main(["diagnostics", "--config", cfg, "--out", str(out)]) == 0
    assert "diagnostics written" in capsys.readouterr().out
    assert (out / "diagnostics.csv").exists()


def test_report_command(tmp_path, capsys):
    cfg = _config(tmp_path, RECOVERY_CONFIG)
    out = tmp_path / "out"
    assert main(["recovery-sweep", "--config", cfg, "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["report", "--out", str(out)]) == 0
    assert "wrote" in capsys.readouterr().out
    assert (out / "summary.txt").read_text().startswith("aggregated report")


def test_report_requires_out(capsys):
    assert main(["report"]) == 1
    assert capsys.readouterr().err == "error: config-validation: report needs --out\n"


def test_missing_config_reported(tmp_path, capsys):
    assert main(["limit-min", "--config", str(tmp_path / "nope.toml")]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error: config-validation:")
    assert err.count("\n") == 1


def test_invalid_gamma_reported(tmp_path, capsys):
    cfg = _config(tmp_path, "[prestrain]\ngamma = 2.0\n")
    assert main(["full-min", "--config", cfg]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error: config-validation:")
    assert err.count("\n") == 1


def test_missing_displacement_reported(tmp_path, capsys):
    cfg = _config(tmp_path, LIMIT_CONFIG)
    assert main(["recovery-sweep", "--config", cfg,
                 "--out", str(tmp_path / "out")]) == 1
    assert "error: config-validation:" in capsys.readouterr().err


def test_underresolved_sweep_reported(tmp_path, capsys):
    text = RECOVERY_CONFIG.replace("kx = 3.141592653589793",
                                   "kx = 25.132741228718345")
    text = text.replace("ky = 3.141592653589793", "ky = 25.132741228718345")
    text = text.replace("n1 = 24", "n1 = 9").replace("n2 = 24", "n2 = 9")
    cfg = _config(tmp_path, text)
    assert main(["recovery-sweep", "--config", cfg,
                 "--out", str(tmp_path / "out")]) == 1
    assert capsys.readouterr().err.startswith("error: refinement-check:")


def test_usage_errors_exit_two(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["limit-min"])
    assert exc.value.code == 2


def test_q2_check_command(tmp_path, capsys):
    cfg = _config(tmp_path, "[prestrain]\ngamma = 3.0\n")
    assert main(["q2-check", "--config", cfg]) == 0
    assert "q2 check on 10000 samples" in capsys.readouterr().out


def test_module_invocation(tmp_path):
    cfg = _config(tmp_path, LIMIT_CONFIG)
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "prestrain_plate.cli", "limit-min",
         "--config", cfg, "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "bending minimum" in proc.stdout
