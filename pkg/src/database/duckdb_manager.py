"""DuckDB run ledger."""

from __future__ import annotations

import threading
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from types import TracebackType

import duckdb
import pandas as pd

from ..utils.config import LEDGER_FILENAME, OUT_DIR
from ..utils.logger import logger


@dataclass(slots=True)
class RunRecord:
    """Representation of a stored CLI run."""

    id: int
    subcommand: str
    config_hash: str
    seed: int | None
    output_dir: str
    status: str
    exit_code: int | None
    wall_time_seconds: float | None
    created_at: datetime | None


class RunLedger:
    """Append-only record of runs and their scalar summaries."""

    def __init__(self, db_path: Path | None = None) -> None:
        self.db_path = Path(db_path) if db_path is not None else OUT_DIR / LEDGER_FILENAME
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self.conn = duckdb.connect(str(self.db_path))
        self._lock = threading.Lock()
        logger.debug("Connected to run ledger at %s", self.db_path)
        self._initialize_schema()

    def __enter__(self) -> RunLedger:
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        self.close()

    def close(self) -> None:
        with self._lock:
            self.conn.close()

    def _initialize_schema(self) -> None:
        """Create the schema if it is not present."""
        with self._lock:
            self.conn.execute("CREATE SEQUENCE IF NOT EXISTS runs_seq START 1;")
            self.conn.execute(
                """
                CREATE TABLE IF NOT EXISTS runs (
                    id BIGINT PRIMARY KEY DEFAULT nextval('runs_seq'),
                    subcommand VARCHAR NOT NULL,
                    config_hash VARCHAR NOT NULL,
                    seed UBIGINT,
                    output_dir VARCHAR NOT NULL,
                    status VARCHAR DEFAULT 'running',
                    exit_code INTEGER,
                    wall_time_seconds DOUBLE,
                    error_message TEXT,
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                );
                """
            )
            self.conn.execute(
                """
                CREATE TABLE IF NOT EXISTS summaries (
                    run_id BIGINT NOT NULL,
                    name VARCHAR NOT NULL,
                    value DOUBLE
                );
                """
            )

    def start_run(
        self, subcommand: str, config_hash: str, seed: int | None, output_dir: Path
    ) -> int:
        """Register a run and return its id."""
        with self._lock:
            result = self.conn.execute(
                """
                INSERT INTO runs (subcommand, config_hash, seed, output_dir)
                VALUES (?, ?, ?, ?)
                RETURNING id;
                """,
                [subcommand, config_hash, seed, str(output_dir)],
            ).fetchone()
        if not result:
            raise RuntimeError("Failed to register run in ledger.")
        return int(result[0])

    def finish_run(
        self,
        run_id: int,
        *,
        status: str,
        exit_code: int,
        wall_time_seconds: float | None = None,
        error_message: str | None = None,
    ) -> None:
        logger.debug("Run %s finished with status %s (exit %s)", run_id, status, exit_code)
        with self._lock:
            self.conn.execute(
                """
                UPDATE runs
                SET status = ?, exit_code = ?, wall_time_seconds = ?, error_message = ?
                WHERE id = ?;
                """,
                [status, exit_code, wall_time_seconds, error_message, run_id],
            )

    def record_summary(self, run_id: int, values: Mapping[str, float]) -> None:
        """Store scalar results such as ``F_max`` or ``mean_F``."""
        rows = [[run_id, name, float(value)] for name, value in sorted(values.items())]
        if not rows:
            return
        with self._lock:
            self.conn.executemany(
                "INSERT INTO summaries (run_id, name, value) VALUES (?, ?, ?);", rows
            )

    def fetch_runs(self, limit: int = 100) -> Sequence[RunRecord]:
        """Most recent runs first."""
        with self._lock:
            rows = self.conn.execute(
                """
                SELECT id, subcommand, config_hash, seed, output_dir, status,
                       exit_code, wall_time_seconds, created_at
                FROM runs
                ORDER BY id DESC
                LIMIT ?;
                """,
                [limit],
            ).fetchall()
        return [RunRecord(*row) for row in rows]

    def fetch_summaries(self, run_id: int) -> dict[str, float]:
        with self._lock:
            rows = self.conn.execute(
                "SELECT name, value FROM summaries WHERE run_id = ? ORDER BY name;",
                [run_id],
            ).fetchall()
        return {name: value for name, value in rows}

    def to_frame(self) -> pd.DataFrame:
        """Runs joined with their summaries, one row per (run, summary)."""
        with self._lock:
            return self.conn.execute(
                """
                SELECT r.id, r.subcommand, r.config_hash, r.seed, r.output_dir,
                       r.status, r.exit_code, r.wall_time_seconds, r.created_at,
                       s.name AS summary_name, s.value AS summary_value
                FROM runs r
                LEFT JOIN summaries s ON s.run_id = r.id
                ORDER BY r.id, s.name;
                """
            ).df()
