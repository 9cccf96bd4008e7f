"""Run acceptance criteria and print one line each.

    python3 scripts/acceptance.py [N ...] [--workers K]
"""
import argparse
import sys

from susypt.acceptance import CRITERIA, run_all


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("numbers", nargs="*", type=int, help="criteria to run, default all")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    bad = [n for n in args.numbers if n not in CRITERIA]
    if bad:
        ap.error(f"unknown criteria {bad}")
    results = run_all(args.numbers or None, args.workers)
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
