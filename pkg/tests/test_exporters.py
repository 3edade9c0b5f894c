"""Tests for dataset writers and provenance metadata."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pandas as pd

from src import __version__
from src.export.exporters import (
    DatasetWriter,
    _jsonable,
    canonical_json,
    config_hash,
    write_csv,
    write_json,
)


class TestJsonable:
    """Test suite for JSON conversion."""

    def test_numpy_values(self) -> None:
        assert _jsonable(np.float64(0.5)) == 0.5
        assert _jsonable(np.arange(3)) == [0, 1, 2]
        assert _jsonable({1: (np.int64(2),)}) == {"1": [2]}

    def test_special_values(self) -> None:
        """Non-finite floats, complex numbers and paths have JSON forms."""
        assert _jsonable(math.nan) is None
        assert _jsonable(math.inf) == "inf"
        assert _jsonable(-math.inf) == "-inf"
        assert _jsonable(1 + 2j) == [1.0, 2.0]
        assert _jsonable(Path("a") / "b") == str(Path("a") / "b")


class TestHashing:
    """Test suite for configuration hashes."""

    def test_key_order_irrelevant(self) -> None:
        assert config_hash({"a": 1, "b": {"c": 2, "d": 3}}) == config_hash(
            {"b": {"d": 3, "c": 2}, "a": 1}
        )

    def test_values_matter(self) -> None:
        assert config_hash({"a": 1}) != config_hash({"a": 2})

    def test_canonical_form(self) -> None:
        assert canonical_json({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'
        assert len(config_hash({})) == 64


class TestWriters:
    """Test suite for CSV and JSON output."""

    def test_csv_round_trip_precision(self, tmp_path: Path) -> None:
        """Floats are written with 17 significant digits and LF endings."""
        path = write_csv(pd.DataFrame({"x": [0.1], "n": [3]}), tmp_path / "sub" / "a.csv")
        raw = path.read_bytes()
        assert raw == b"x,n\n0.10000000000000001,3\n"
        assert float(pd.read_csv(path)["x"][0]) == 0.1

    def test_csv_deterministic(self, tmp_path: Path) -> None:
        """The same frame gives byte-identical files."""
        frame = pd.DataFrame({"t": np.linspace(0.0, 1.0, 7), "f": np.sqrt(np.arange(7.0))})
        first = write_csv(frame, tmp_path / "first.csv").read_bytes()
        second = write_csv(frame, tmp_path / "second.csv").read_bytes()
        assert first == second

    def test_json_sorted(self, tmp_path: Path) -> None:
        path = write_json({"b": np.float64(2.0), "a": math.inf}, tmp_path / "doc.json")
        text = path.read_text(encoding="utf-8")
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": "inf", "b": 2.0}


class TestDatasetWriter:
    """Test suite for per-dataset provenance."""

    def test_metadata(self, tmp_path: Path) -> None:
        """metadata.json lists files, summaries and the config hash."""
        config = {"seed": 3, "experiment": {"g": 0.5}}
        writer = DatasetWriter(root=tmp_path / "bic", subcommand="bic", config=config, seed=3)
        writer.write_panel("spectrum", pd.DataFrame({"energy": [0.0]}))
        writer.write_document("bic", {"n_bic": 1})
        writer.add_summary(n_bic=1, F=np.float64(0.99))
        path = writer.write_metadata(wall_time_seconds=1.5, extra={"note": "x"})

        metadata = json.loads(path.read_text(encoding="utf-8"))
        assert metadata["subcommand"] == "bic"
        assert metadata["seed"] == 3
        assert metadata["config_hash"] == config_hash(config) == writer.config_hash
        assert metadata["code_version"] == __version__
        assert metadata["files"] == ["bic.json", "spectrum.csv"]
        assert metadata["summary"] == {"F": 0.99, "n_bic": 1.0}
        assert metadata["wall_time_seconds"] == 1.5
        assert metadata["note"] == "x"
        assert "created_at" in metadata
