"""Tests for the command-line front end."""

from __future__ import annotations

import json
import math
from pathlib import Path

import pytest
from pytest_mock import MockerFixture

from src.cli import EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, build_parser, main
from src.core.errors import NumericalError
from src.database.duckdb_manager import RunLedger
from src.experiments.figures import FigureResult
from src.export.exporters import config_hash
from src.utils.config import LEDGER_FILENAME
from src.utils.run_config import load_run_config


def _ledger_runs(out: Path) -> list:
    with RunLedger(out / LEDGER_FILENAME) as ledger:
        return list(ledger.fetch_runs())


class TestParser:
    """Test suite for argument parsing."""

    def test_common_options(self) -> None:
        args = build_parser().parse_args(
            ["bell", "--seed", "3", "--set", "drive.eta=0.05", "--set", "drive.t0=never"]
        )
        assert args.subcommand == "bell"
        assert args.seed == 3
        assert args.overrides == ["drive.eta=0.05", "drive.t0=never"]

    def test_unknown_figure_exits_invalid(self) -> None:
        with pytest.raises(SystemExit) as excinfo:
            main(["figure", "fig9"])
        assert excinfo.value.code == EXIT_INVALID

    def test_missing_subcommand(self) -> None:
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == EXIT_INVALID


class TestExitCodes:
    """Test suite for exit codes and the run ledger."""

    def test_bic_success(self, braided_toml: Path, tmp_path: Path) -> None:
        out = tmp_path / "out"
        assert main(["bic", "--config", str(braided_toml), "--out", str(out)]) == EXIT_OK

        metadata = json.loads((out / "bic" / "metadata.json").read_text(encoding="utf-8"))
        expected = config_hash(load_run_config(braided_toml).resolved())
        assert metadata["config_hash"] == expected
        assert metadata["seed"] == 7
        assert metadata["summary"]["n_bic"] == 1.0
        payload = json.loads((out / "bic" / "bic.json").read_text(encoding="utf-8"))
        assert payload["fidelity_conditional"] == pytest.approx(1.0, abs=1e-6)

        runs = _ledger_runs(out)
        assert [(r.subcommand, r.status, r.exit_code) for r in runs] == [("bic", "success", 0)]
        assert runs[0].config_hash == expected

    def test_missing_config_file(self, tmp_path: Path) -> None:
        code = main(["bic", "--config", str(tmp_path / "absent.toml"), "--out", str(tmp_path)])
        assert code == EXIT_INVALID
        assert not (tmp_path / LEDGER_FILENAME).exists()

    def test_dimensional_override(self, braided_toml: Path, tmp_path: Path) -> None:
        code = main(
            [
                "bic",
                "--config",
                str(braided_toml),
                "--set",
                'experiment.g="0.5 GHz"',
                "--out",
                str(tmp_path),
            ]
        )
        assert code == EXIT_INVALID

    def test_invalid_specification(self, tmp_path: Path) -> None:
        code = main(
            [
                "bic",
                "--set",
                "waveguide.n_sites=20",
                "--set",
                "atoms=[{legs=[5, 40]}]",
                "--out",
                str(tmp_path),
            ]
        )
        assert code == EXIT_INVALID
        assert _ledger_runs(tmp_path)[0].status == "invalid"

    def test_numerical_failure(
        self, braided_toml: Path, tmp_path: Path, mocker: MockerFixture
    ) -> None:
        mocker.patch("src.cli.bic_report", side_effect=NumericalError("eigensolver residual"))
        code = main(["bic", "--config", str(braided_toml), "--out", str(tmp_path)])
        assert code == EXIT_NUMERICAL
        record = _ledger_runs(tmp_path)[0]
        assert (record.status, record.exit_code) == ("numerical_error", EXIT_NUMERICAL)

    def test_no_ledger(self, braided_toml: Path, tmp_path: Path) -> None:
        code = main(
            ["bic", "--config", str(braided_toml), "--out", str(tmp_path), "--no-ledger"]
        )
        assert code == EXIT_OK
        assert not (tmp_path / LEDGER_FILENAME).exists()


class TestSubcommands:
    """Test suite for dataset-producing subcommands."""

    def test_figure_dispatch(self, tmp_path: Path, mocker: MockerFixture) -> None:
        result = FigureResult(
            "fig3", summary={"bic_min_fidelity": 1.0, "bad": math.nan}, output_dir=tmp_path
        )
        reproduce = mocker.patch("src.cli.reproduce_figure", return_value=result)
        assert main(["figure", "fig3", "--out", str(tmp_path), "--workers", "3"]) == EXIT_OK

        name, config, out = reproduce.call_args.args
        assert name == "fig3"
        assert out == tmp_path
        assert reproduce.call_args.kwargs == {"workers": 3}
        assert config.seed == 0
        record = _ledger_runs(tmp_path)[0]
        assert record.subcommand == "figure fig3"
        with RunLedger(tmp_path / LEDGER_FILENAME) as ledger:
            assert ledger.fetch_summaries(record.id) == {"bic_min_fidelity": 1.0}

    def test_spectrum_is_deterministic(self, braided_toml: Path, tmp_path: Path) -> None:
        """Two runs with the same document give byte-identical CSVs."""
        for name in ("a", "b"):
            argv = ["spectrum", "--config", str(braided_toml), "--no-ledger"]
            assert main([*argv, "--out", str(tmp_path / name)]) == EXIT_OK
        first = (tmp_path / "a" / "spectrum" / "spectrum.csv").read_bytes()
        second = (tmp_path / "b" / "spectrum" / "spectrum.csv").read_bytes()
        assert first == second
        assert first.startswith(b"g,index,energy,class,localization_metric\n")

    def test_evolve_explicit_atoms(self, config_dir: Path, tmp_path: Path) -> None:
        """Undriven |eg> relaxes to 1/sqrt(2) symmetric fidelity."""
        code = main(
            [
                "evolve",
                "--config",
                str(config_dir / "custom_atoms.toml"),
                "--set",
                "experiment.t_end=20.0",
                "--out",
                str(tmp_path),
                "--no-ledger",
            ]
        )
        assert code == EXIT_OK
        assert (tmp_path / "evolve" / "trajectory.csv").is_file()
        metadata = json.loads((tmp_path / "evolve" / "metadata.json").read_text("utf-8"))
        assert metadata["release_time"] is None
        assert metadata["summary"]["F_final"] == pytest.approx(1 / math.sqrt(2), abs=1e-3)

    def test_evolve_auto_needs_named_configuration(
        self, config_dir: Path, tmp_path: Path
    ) -> None:
        code = main(
            [
                "evolve",
                "--config",
                str(config_dir / "custom_atoms.toml"),
                "--set",
                "drive.eta=0.01",
                "--out",
                str(tmp_path),
                "--no-ledger",
            ]
        )
        assert code == EXIT_INVALID

    def test_bell_rejects_explicit_atoms(self, config_dir: Path, tmp_path: Path) -> None:
        code = main(
            [
                "bell",
                "--config",
                str(config_dir / "custom_atoms.toml"),
                "--out",
                str(tmp_path),
                "--no-ledger",
            ]
        )
        assert code == EXIT_INVALID

    def test_bell_fixed_release(self, braided_toml: Path, tmp_path: Path) -> None:
        code = main(
            [
                "bell",
                "--config",
                str(braided_toml),
                "--set",
                "drive.eta=0.05",
                "--set",
                "drive.t0=30.0",
                "--set",
                "experiment.t_end=60.0",
                "--out",
                str(tmp_path),
                "--no-ledger",
            ]
        )
        assert code == EXIT_OK
        metadata = json.loads((tmp_path / "bell" / "metadata.json").read_text("utf-8"))
        assert metadata["protocol"]["release_time"] == 30.0
        assert set(metadata["summary"]) == {"t_max", "F_max", "F_final"}
