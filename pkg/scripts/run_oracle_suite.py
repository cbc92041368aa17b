import argparse
import json
import logging
import os
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from sav_bottleneck.core.config import settings  # noqa: E402
from sav_bottleneck.services.oracle_suite import run_oracle_suite  # noqa: E402


def main(argv=None):
    parser = argparse.ArgumentParser(description="Run every numerical oracle and print a JSON summary.")
    parser.add_argument("--quick", action="store_true", help="Smaller batches.")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--tol", type=float, default=None, help="Override the knife-edge tolerance.")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.WARNING, format="level=%(levelname)s logger=%(name)s msg=%(message)s")
    cfg = settings if args.tol is None else settings.model_copy(update={"threshold_tol": args.tol})
    report = run_oracle_suite(cfg, seed=args.seed, quick=args.quick)

    summary = {}
    for check in report.checks:
        print("Checking:", check.name)
        print(" ->", "PASS" if check.passed else "FAIL", "-", check.detail)
        summary[check.name] = {"ok": check.passed, "worst": check.worst, "seconds": round(check.elapsed, 3)}
    print("\nSummary:")
    print(json.dumps(summary, indent=2))
    # exit code non-zero if any fail
    return 0 if report.passed else 2


if __name__ == "__main__":
    sys.exit(main())
