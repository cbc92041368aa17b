#!/usr/bin/env python
"""Run the sav_bottleneck test suite; extra arguments go straight to pytest."""
import subprocess
import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parent
TESTS = PROJECT_ROOT / "tests"


def main() -> int:
    cmd = [sys.executable, "-m", "pytest", str(TESTS), *sys.argv[1:]]
    try:
        result = subprocess.run(cmd, cwd=PROJECT_ROOT, check=False)
    except FileNotFoundError:
        print(f"Could not start {sys.executable}; is the sav_bottleneck environment active?")
        return 1
    if result.returncode != 0:
        print("Equilibrium checks failed; see the pytest report above.")
    return result.returncode


if __name__ == "__main__":
    raise SystemExit(main())
