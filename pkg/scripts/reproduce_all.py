"""Regenerate the data behind every figure into one directory."""

import argparse
import time
from pathlib import Path

from clipsgd.cli import FIGURES, reproduce


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--runs", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--only", nargs="*", choices=FIGURES, help="subset of figures")
    args = parser.parse_args()
    for fig in args.only or FIGURES:
        start = time.perf_counter()
        manifest = reproduce(fig, args.out, args.runs, args.seed, args.workers)
        print(f"{fig}: {len(manifest['files'])} files in {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
