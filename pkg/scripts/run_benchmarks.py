#!/usr/bin/env python3
"""Run every experiment config in scripts/configs through the CLI.

Each run emits per-RHS convergence CSVs, a summary table and a plot
script into the config's output directory. Pass config paths to run a
subset; default is all of them.
"""

import sys
from pathlib import Path

from srkrylov.cli import main as cli_main


def run(config_paths):
    failures = []
    for path in config_paths:
        print(f"== run {path}")
        status = cli_main(["run", str(path)])
        print(f"== diagnose {path}")
        status |= cli_main(["diagnose", str(path)])
        if status != 0:
            failures.append((path, status))
    return failures


def main():
    args = sys.argv[1:]
    if args:
        paths = [Path(a) for a in args]
    else:
        here = Path(__file__).resolve().parent
        paths = sorted((here / "configs").glob("*.json"))
    failures = run(paths)
    for path, status in failures:
        print(f"FAILED ({status}): {path}", file=sys.stderr)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
