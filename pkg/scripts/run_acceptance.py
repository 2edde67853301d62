"""Run the acceptance criteria and write a JSON summary.

usage: python3 scripts/run_acceptance.py [-o results.json] [criterion ...]
"""

import argparse
import json
import sys
from dataclasses import asdict

from kahlerspec.acceptance import CRITERIA, run_all
from kahlerspec.cli import jsonable


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("criteria", nargs="*", type=int, choices=sorted(CRITERIA))
    p.add_argument("-o", "--output")
    args = p.parse_args()
    results = run_all(args.criteria or None)
    for r in results:
        print(r.line())
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(jsonable([asdict(r) for r in results]), fh, indent=2, sort_keys=True)
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
