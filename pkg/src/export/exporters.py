"""CSV/JSON writers for simulation datasets."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .. import __version__
from ..utils.config import CSV_SIGNIFICANT_DIGITS
from ..utils.logger import logger

FLOAT_FORMAT = f"%.{CSV_SIGNIFICANT_DIGITS}g"


def _jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays, paths and non-finite floats for ``json``."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, Path):
        return str(value)
    return value


def canonical_json(payload: Any) -> str:
    """Key-sorted, whitespace-free JSON used for hashing."""
    return json.dumps(_jsonable(payload), sort_keys=True, separators=(",", ":"))


def config_hash(config: Any) -> str:
    """SHA256 of the canonical JSON of a resolved configuration."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Write ``frame`` with fixed float formatting (UTF-8, LF, header, no index)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(
        path,
        index=False,
        encoding="utf-8",
        lineterminator="\n",
        float_format=FLOAT_FORMAT,
    )
    logger.info("Wrote %s (%d rows)", path, len(frame))
    return path


def write_json(payload: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(_jsonable(payload), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def build_metadata(
    subcommand: str,
    config: dict[str, Any],
    seed: int | None,
    *,
    wall_time_seconds: float | None = None,
    extra: dict[str, Any] | None = None,
) -> dict[str, Any]:
    """Provenance document stored next to every dataset."""
    return {
        "subcommand": subcommand,
        "config_hash": config_hash(config),
        "seed": seed,
        "config": config,
        "code_version": __version__,
        "wall_time_seconds": wall_time_seconds,
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        **(extra or {}),
    }


@dataclass
class DatasetWriter:
    """Writes ``<root>/<panel>.csv`` files and one ``metadata.json`` per dataset."""

    root: Path
    subcommand: str
    config: dict[str, Any]
    seed: int | None = None
    files: list[Path] = field(default_factory=list)
    summaries: dict[str, float] = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def write_panel(self, panel: str, frame: pd.DataFrame) -> Path:
        path = write_csv(frame, self.root / f"{panel}.csv")
        self.files.append(path)
        return path

    def write_document(self, name: str, payload: Any) -> Path:
        path = write_json(payload, self.root / f"{name}.json")
        self.files.append(path)
        return path

    def add_summary(self, **values: float) -> None:
        self.summaries.update({k: float(v) for k, v in values.items()})

    def write_metadata(
        self, *, wall_time_seconds: float | None = None, extra: dict[str, Any] | None = None
    ) -> Path:
        metadata = build_metadata(
            self.subcommand,
            self.config,
            self.seed,
            wall_time_seconds=wall_time_seconds,
            extra={
                "files": sorted(p.name for p in self.files),
                "summary": dict(sorted(self.summaries.items())),
                **(extra or {}),
            },
        )
        return write_json(metadata, self.root / "metadata.json")
