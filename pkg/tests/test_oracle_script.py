import importlib.util
import json
import os
import subprocess
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SCRIPT = os.path.join(ROOT, "scripts", "run_oracle_suite.py")


def test_run_oracle_suite_quick():
    if not os.path.exists(SCRIPT):
        pytest.skip("run_oracle_suite.py not found at {}".format(SCRIPT))
    proc = subprocess.run([sys.executable, SCRIPT, "--quick", "--seed", "7"], capture_output=True, text=True)
    if proc.returncode != 0:
        print("STDOUT:\n", proc.stdout)
        print("STDERR:\n", proc.stderr)
    assert proc.returncode == 0, "Oracle suite failed (exit code {})".format(proc.returncode)
    summary = json.loads(proc.stdout.split("Summary:", 1)[1])
    assert all(entry["ok"] for entry in summary.values())


def test_dynamics_axioms_hold_at_rest_points():
    from sav_bottleneck.services.oracle_suite import OracleSuite

    result = OracleSuite(seed=7, quick=True).dynamics_axioms()
    assert result.passed, result.detail
    assert result.worst == 0.0


def test_run_checks_targets_test_directory(monkeypatch):
    path = os.path.join(ROOT, "run_checks.py")
    if not os.path.exists(path):
        pytest.skip("run_checks.py not found at {}".format(path))
    module_spec = importlib.util.spec_from_file_location("run_checks", path)
    module = importlib.util.module_from_spec(module_spec)
    module_spec.loader.exec_module(module)

    calls = []

    def fake_run(cmd, cwd, check):
        calls.append((cmd, cwd))
        return subprocess.CompletedProcess(cmd, 3)

    monkeypatch.setattr(module.subprocess, "run", fake_run)
    monkeypatch.setattr(module.sys, "argv", ["run_checks.py", "-k", "stability"])
    assert module.main() == 3
    cmd, cwd = calls[0]
    assert cmd[1:4] == ["-m", "pytest", os.path.join(ROOT, "tests")]
    assert cmd[4:] == ["-k", "stability"]
    assert str(cwd) == ROOT
