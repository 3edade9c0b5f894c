"""CLI to export the run ledger or list written datasets.

Usage:
  python scripts/export_results.py --output data/out/runs.csv
  python scripts/export_results.py --out-dir data/out --datasets
"""

from __future__ import annotations

import argparse
from pathlib import Path

import pandas as pd

from src.database.duckdb_manager import RunLedger
from src.export.exporters import write_csv
from src.utils.config import LEDGER_FILENAME, OUT_DIR
from src.utils.file_utils import list_dataset_dirs, read_metadata


def dataset_frame(out_dir: Path) -> pd.DataFrame:
    """One row per dataset directory with its provenance fields."""
    rows = []
    for folder in list_dataset_dirs(out_dir):
        meta = read_metadata(folder)
        rows.append(
            {
                "path": str(folder.relative_to(out_dir)),
                "subcommand": meta.get("subcommand"),
                "config_hash": meta.get("config_hash"),
                "seed": meta.get("seed"),
                "code_version": meta.get("code_version"),
                "wall_time_seconds": meta.get("wall_time_seconds"),
                "created_at": meta.get("created_at"),
            }
        )
    return pd.DataFrame(
        rows,
        columns=[
            "path",
            "subcommand",
            "config_hash",
            "seed",
            "code_version",
            "wall_time_seconds",
            "created_at",
        ],
    )


def main() -> None:
    parser = argparse.ArgumentParser(description="Export the run ledger to CSV.")
    parser.add_argument(
        "--out-dir",
        type=Path,
        default=OUT_DIR,
        help=f"Output root holding {LEDGER_FILENAME}. Default: {OUT_DIR}",
    )
    parser.add_argument(
        "--output",
        type=Path,
        help="CSV path. Default: <out-dir>/runs.csv (or datasets.csv with --datasets)",
    )
    parser.add_argument(
        "--datasets",
        action="store_true",
        help="List dataset directories from their metadata instead of the ledger.",
    )
    args = parser.parse_args()

    if args.datasets:
        frame = dataset_frame(args.out_dir)
        default = args.out_dir / "datasets.csv"
    else:
        ledger_path = args.out_dir / LEDGER_FILENAME
        if not ledger_path.is_file():
            parser.error(f"no ledger at {ledger_path}")
        with RunLedger(ledger_path) as ledger:
            frame = ledger.to_frame()
        default = args.out_dir / "runs.csv"

    out_path = args.output or default
    write_csv(frame, out_path)
    print(f"Export complete: {out_path} ({len(frame)} rows)")


if __name__ == "__main__":
    main()
