"""Helpers for discovering dataset directories under an output root."""

from __future__ import annotations

import json
from collections.abc import Iterable
from pathlib import Path
from typing import Any

METADATA_FILENAME = "metadata.json"


def iter_dataset_dirs(folder: Path, recursive: bool = True) -> Iterable[Path]:
    """Yield directories in ``folder`` that hold a ``metadata.json``.

    Args:
        folder: Output root to search
        recursive: If True, search in all subdirectories (default: True)
    """
    pattern = f"**/{METADATA_FILENAME}" if recursive else f"*/{METADATA_FILENAME}"
    for entry in folder.glob(pattern):
        if entry.is_file():
            yield entry.parent


def list_dataset_dirs(folder: Path, recursive: bool = True) -> list[Path]:
    """Return dataset directories sorted by path."""
    return sorted(iter_dataset_dirs(folder, recursive=recursive), key=lambda path: str(path))


def read_metadata(dataset_dir: Path) -> dict[str, Any]:
    with open(dataset_dir / METADATA_FILENAME, encoding="utf-8") as f:
        return json.load(f)
