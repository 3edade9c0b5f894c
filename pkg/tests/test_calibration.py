"""Tests for the kernel prefactor calibration."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from src.evaluation.calibration import (
    CalibrationCase,
    CalibrationReport,
    _fit_scale,
    master_excited_population,
    report_dict,
    run_calibration,
    save_report_json,
)


def _case(name: str = "one_leg", **overrides: object) -> CalibrationCase:
    values: dict[str, object] = {
        "name": name,
        "legs": (0,),
        "g": 0.1,
        "window": 50.0,
        "fitted_scale": 1.01,
        "relative_error": 0.01,
        "max_deviation": 0.005,
        "deviation_tolerance": 0.01,
        "scale_tolerance": 0.02,
    }
    values.update(overrides)
    return CalibrationCase(**values)  # type: ignore[arg-type]


class TestMasterReference:
    """Test suite for the Markovian reference curve."""

    def test_one_leg_decay(self) -> None:
        """One leg decays at g**2/xi."""
        times = np.array([0.0, 10.0, 50.0])
        population = master_excited_population((0,), 0.1, times)
        assert population == pytest.approx(np.exp(-0.01 * times), rel=1e-6)

    def test_scale_multiplies_rate(self) -> None:
        """The prefactor scale speeds up the decay."""
        times = np.array([0.0, 20.0])
        fast = master_excited_population((0,), 0.1, times, scale=2.0)
        assert fast[-1] == pytest.approx(np.exp(-0.4), rel=1e-6)


class TestFitScale:
    """Test suite for the prefactor fit."""

    @pytest.mark.parametrize("scale", [0.8, 1.0, 1.3])
    def test_recovers_synthetic_scale(self, scale: float) -> None:
        """An exact exponential gives back its scale."""
        times = np.linspace(0.0, 50.0, 101)
        synthetic = np.exp(-scale * 0.01 * times)
        assert _fit_scale((0,), 0.1, times, synthetic) == pytest.approx(scale, rel=1e-4)

    def test_dark_atom_rejected(self) -> None:
        """Legs two sites apart cancel at band centre."""
        times = np.linspace(0.0, 10.0, 11)
        with pytest.raises(ValueError):
            _fit_scale((0, 2), 0.1, times, np.ones_like(times))


class TestReport:
    """Test suite for pass/fail bookkeeping and export."""

    def test_case_passes_within_tolerances(self) -> None:
        assert _case().passed
        assert not _case(max_deviation=0.02).passed
        assert not _case(relative_error=0.05).passed
        assert _case(deviation_tolerance=None, scale_tolerance=None, max_deviation=1.0).passed

    def test_prefactor_ratio(self) -> None:
        """The ratio comes from the reference case."""
        report = CalibrationReport(cases=[_case("two_leg", fitted_scale=0.7), _case()])
        assert report.prefactor_ratio == 1.01
        assert report.passed
        with pytest.raises(KeyError):
            _ = CalibrationReport(cases=[_case("two_leg")]).prefactor_ratio

    def test_save_json(self, tmp_path: Path) -> None:
        """Reports serialize with per-case status."""
        report = CalibrationReport(cases=[_case()])
        path = tmp_path / "nested" / "calibration.json"
        save_report_json(report, path)
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert payload == json.loads(json.dumps(report_dict(report)))
        assert payload["cases"][0]["legs"] == [0]
        assert payload["cases"][0]["passed"] is True


@pytest.mark.slow
class TestStandardCalibration:
    """The full oracle-against-master calibration."""

    def test_all_cases_pass(self) -> None:
        """The g**2/(2 xi) convention holds within 2 %."""
        report = run_calibration()
        assert report.passed
        assert report.prefactor_ratio == pytest.approx(1.0, abs=0.02)
