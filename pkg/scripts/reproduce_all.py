"""Reproduce every figure dataset in one go.

Usage:
  python scripts/reproduce_all.py --out data/out
  python scripts/reproduce_all.py --only fig3 fig4a --seed 7
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from src.cli import main as cli_main
from src.utils.config import FIGURE_NAMES, OUT_DIR


def main() -> int:
    parser = argparse.ArgumentParser(description="Run `figure <name>` for all figures.")
    parser.add_argument("--config", type=Path, help="TOML run document shared by all figures.")
    parser.add_argument("--seed", type=int, default=None, help="Master seed.")
    parser.add_argument("--out", type=Path, default=OUT_DIR, help="Output root.")
    parser.add_argument(
        "--only", nargs="+", choices=FIGURE_NAMES, default=list(FIGURE_NAMES), help="Subset."
    )
    args = parser.parse_args()

    failures = []
    for name in args.only:
        argv = ["figure", name, "--out", str(args.out)]
        if args.config is not None:
            argv += ["--config", str(args.config)]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        code = cli_main(argv)
        if code != 0:
            failures.append((name, code))

    print("\n" + "=" * 80)
    print(f"Figures: {len(args.only)}  failed: {len(failures)}")
    for name, code in failures:
        print(f"  {name}: exit {code}")
    print("=" * 80)
    return max((code for _, code in failures), default=0)


if __name__ == "__main__":
    sys.exit(main())
