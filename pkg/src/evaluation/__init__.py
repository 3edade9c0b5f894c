"""Calibration of the Markovian kernel against exact dynamics."""

from .calibration import (
    CalibrationCase,
    CalibrationReport,
    run_calibration,
    save_report_json,
)

__all__ = [
    "CalibrationCase",
    "CalibrationReport",
    "run_calibration",
    "save_report_json",
]
