import json
import subprocess
import sys

import pytest

from kahlerspec import __version__
from kahlerspec.cli import UsageError, build_config, main


def run(args, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main(args + ["--output", str(out), "--no-timestamp"])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_check_identities_ball(tmp_path):
    code, rep = run(["check-identities", "--domain", "ball", "--n", "2", "--samples", "10"], tmp_path)
    assert code == 0
    assert rep["version"] == __version__
    assert "normalization" in rep and "timestamp" not in rep
    assert rep["subcommand"] == "check-identities"


def test_deterministic_output(tmp_path):
    args = ["webster", "--domain", "ball", "--n", "2", "--points", "5"]
    out = tmp_path / "a.json"
    main(args + ["-o", str(out), "--no-timestamp"])
    first = out.read_bytes()
    main(args + ["-o", str(out), "--no-timestamp"])
    assert out.read_bytes() == first
    assert not list(tmp_path.glob("*.tmp*"))


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"domain": "ball", "n": 3, "points": 4, "seed": 7}))
    code, rep = run(["webster", "--config", str(cfg), "--points", "6"], tmp_path)
    assert code == 0
    assert rep["config"]["points"] == 6
    assert rep["config"]["seed"] == 7
    assert rep["config"]["domain"]["n"] == 3


def test_unknown_config_key():
    with pytest.raises(UsageError):
        build_config("webster", {"bogus": 1}, {})


@pytest.mark.parametrize(
    "args",
    [
        ["webster", "--domain", "nowhere"],
        ["no-such-command"],
        ["check-identities", "--domain", "ball", "--n", "0"],
        ["webster", "--domain", "calabi-chart", "--n", "2"],
        ["solve-fefferman", "--domain", "ball", "--grid", "4"],
        ["estimate-lambda0", "--domain", "ball", "--eps", "0.01", "0.1"],
    ],
)
def test_usage_errors_exit_2(args, tmp_path):
    assert main(args + ["-o", str(tmp_path / "x.json")]) == 2


def test_bad_config_file_exits_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2]")
    assert main(["webster", "--config", str(cfg)]) == 2


def test_solver_failure_exits_1_with_report(tmp_path):
    code, rep = run(["solve-fefferman", "--domain", "perturbed", "--n", "2", "--grid", "17", "--max-iter", "1", "--solver-tol", "1e-14"], tmp_path)
    assert code == 1
    assert rep["error_type"] == "SolverError"
    assert rep["residual_trace"]


def test_calabi_and_curvature(tmp_path):
    code, rep = run(["calabi-check", "--domain", "calabi-chart", "--n", "2", "--points", "5"], tmp_path)
    assert code == 0
    code, rep = run(["curvature-asymptotics", "--domain", "ball", "--n", "2"], tmp_path, "c.json")
    assert code == 0


def test_stdout_and_module_entry():
    out = subprocess.run(
        [sys.executable, "-m", "kahlerspec", "webster", "--domain", "ball", "--n", "2", "--points", "3"],
        capture_output=True,
        text=True,
        check=True,
    )
    rep = json.loads(out.stdout)
    assert "timestamp" in rep
