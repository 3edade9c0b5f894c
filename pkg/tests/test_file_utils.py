"""Tests for dataset discovery helpers."""

from __future__ import annotations

import json
from pathlib import Path

from src.utils.file_utils import METADATA_FILENAME, list_dataset_dirs, read_metadata


def _dataset(root: Path, *parts: str) -> Path:
    folder = root.joinpath(*parts)
    folder.mkdir(parents=True)
    (folder / METADATA_FILENAME).write_text(json.dumps({"subcommand": parts[-1]}), "utf-8")
    return folder


class TestDatasetDiscovery:
    """Test suite for metadata-based discovery."""

    def test_recursive(self, tmp_path: Path) -> None:
        bic = _dataset(tmp_path, "bic")
        fig = _dataset(tmp_path, "figures", "fig3")
        (tmp_path / "empty").mkdir()
        assert list_dataset_dirs(tmp_path) == [bic, fig]

    def test_top_level_only(self, tmp_path: Path) -> None:
        bic = _dataset(tmp_path, "bic")
        _dataset(tmp_path, "figures", "fig3")
        assert list_dataset_dirs(tmp_path, recursive=False) == [bic]

    def test_read_metadata(self, tmp_path: Path) -> None:
        folder = _dataset(tmp_path, "spectrum")
        assert read_metadata(folder) == {"subcommand": "spectrum"}
