"""Global configuration helpers.

This module centralizes configuration and filesystem locations. Values are
read from the environment after loading ``.env`` (and ``.env.local`` for
developer overrides), so every tunable below can be changed without touching
run documents.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path
from typing import Final

from dotenv import load_dotenv

# Load .env first, then .env.local to allow local overrides
load_dotenv()
load_dotenv(
    dotenv_path=Path(__file__).resolve().parent.parent.parent / ".env.local",
    override=True,
)

BASE_DIR: Final[Path] = Path(__file__).resolve().parent.parent.parent


def _flag(name: str, default: str) -> bool:
    return os.getenv(name, default) in {"1", "true", "True"}


def _default_data_root() -> Path:
    """Choose a user-writable data directory.

    Priority:
    1) GIANT_BIC_DATA_DIR env var, if set
    2) ~/.local/share/giant_bic when installed or the repo is read-only
    3) Fallback to repo-local ./data (useful during development)
    """
    override = os.getenv("GIANT_BIC_DATA_DIR")
    if override:
        return Path(override)

    is_frozen = bool(getattr(sys, "frozen", False))
    base_str = str(BASE_DIR).lower()
    in_site_packages = any(
        name in base_str for name in ("site-packages", "dist-packages")
    )
    if is_frozen or in_site_packages or not os.access(BASE_DIR, os.W_OK):
        return Path.home() / ".local" / "share" / "giant_bic"

    return BASE_DIR / "data"


DATA_DIR: Final[Path] = _default_data_root()
OUT_DIR: Final[Path] = Path(os.getenv("GIANT_BIC_OUT_DIR", DATA_DIR / "out"))

# Logging: console always, file only when LOG_FILE is set
LOG_LEVEL: Final[str] = os.getenv("LOG_LEVEL", "INFO")
LOG_FILE: Final[Path | None] = (
    Path(os.environ["LOG_FILE"]) if os.getenv("LOG_FILE") else None
)

# Worker threads for Monte Carlo realizations and independent panels
MAX_WORKERS: Final[int] = int(os.getenv("MAX_WORKERS", "2"))

# ----------------------------- Numerics ----------------------------- #
# Energy unit is the hopping xi; times are in 1/xi.

# Lattice size used by spectral experiments when a run document omits it
DEFAULT_N_SITES: Final[int] = int(os.getenv("DEFAULT_N_SITES", "201"))

# Adaptive Runge-Kutta settings for the exact oracle, also used by the
# master equation when MASTER_METHOD names a solve_ivp method
ODE_RTOL: Final[float] = float(os.getenv("ODE_RTOL", "1e-9"))
ODE_ATOL: Final[float] = float(os.getenv("ODE_ATOL", "1e-12"))
ODE_METHOD: Final[str] = os.getenv("ODE_METHOD", "DOP853")

# Master-equation propagation: "expm" steps with exact segment propagators,
# any solve_ivp method name switches to adaptive integration with the tolerances above
MASTER_METHOD: Final[str] = os.getenv("MASTER_METHOD", "expm")

# The exact single-excitation oracle is held to tighter tolerances so its norm
# drift stays below 1e-9 over the calibration windows.
ORACLE_RTOL: Final[float] = float(os.getenv("ORACLE_RTOL", "1e-12"))
ORACLE_ATOL: Final[float] = float(os.getenv("ORACLE_ATOL", "1e-14"))

# Trace drift beyond this aborts a trajectory
TRACE_DRIFT_LIMIT: Final[float] = float(os.getenv("TRACE_DRIFT_LIMIT", "1e-7"))

# Spectral classification defaults
LOCALIZATION_GUARD: Final[int] = int(os.getenv("LOCALIZATION_GUARD", "2"))
LOCALIZATION_TOL: Final[float] = float(os.getenv("LOCALIZATION_TOL", "1e-4"))
# Clearance beyond the bare band extremes; non-binding edge states drift a few
# 1e-6 above the top of a 201-site ring at g = 0.5
BAND_MARGIN: Final[float] = float(os.getenv("BAND_MARGIN", "2e-5"))

# Disorder Monte Carlo
DISORDER_REALIZATIONS: Final[int] = int(os.getenv("DISORDER_REALIZATIONS", "50"))
DISORDER_OUTLIER_METRIC: Final[float] = float(
    os.getenv("DISORDER_OUTLIER_METRIC", "0.5")
)

# ------------------------------ Output ------------------------------ #
CSV_SIGNIFICANT_DIGITS: Final[int] = int(os.getenv("CSV_SIGNIFICANT_DIGITS", "17"))
LEDGER_ENABLED: Final[bool] = _flag("LEDGER_ENABLED", "1")
LEDGER_FILENAME: Final[str] = os.getenv("LEDGER_FILENAME", "ledger.duckdb")

FIGURE_NAMES: Final[tuple[str, ...]] = (
    "fig2a",
    "fig2b",
    "fig3",
    "fig4a",
    "fig4b",
    "fig5a",
    "fig5b",
    "fig6b",
    "fig6c",
)
