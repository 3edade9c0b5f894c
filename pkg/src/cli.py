"""Command-line front end.

Usage:
  giant-bic bic --config configs/braided2.toml
  giant-bic bell --set drive.eta=0.05 --out out/
  giant-bic figure fig2b --seed 7

Exit codes: 0 success, 1 invalid configuration or specification, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import NoReturn

import numpy as np

from .core.disorder import disorder_fidelity_scan
from .core.errors import NumericalError
from .core.lindblad import (
    DriveSpec,
    coupling_matrix,
    evolve,
    initial_state,
    lindblad_generator,
)
from .core.spectral import bic_report, spectrum_sweep, symmetric_state
from .database.duckdb_manager import RunLedger
from .evaluation.calibration import print_report, report_dict, run_calibration
from .experiments.configurations import NamedConfiguration, build_configuration
from .experiments.figures import reproduce_figure
from .experiments.protocols import (
    ProtocolResult,
    bell_protocol,
    find_optimal_duration,
    w_protocol,
)
from .export.exporters import DatasetWriter, config_hash
from .utils.config import FIGURE_NAMES, LEDGER_ENABLED, LEDGER_FILENAME, OUT_DIR
from .utils.logger import logger
from .utils.run_config import RunConfig, load_run_config

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2


@dataclass
class CommandResult:
    """Where a subcommand wrote its dataset and the scalars worth recording."""

    output_dir: Path
    summary: dict[str, float] = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit 1), not numerical ones."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run document.")
    common.add_argument("--seed", type=int, help="Master seed (overrides the document).")
    common.add_argument(
        "--out", type=Path, default=None, help=f"Output root. Default: {OUT_DIR}"
    )
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a document key, e.g. --set drive.eta=0.05 (repeatable).",
    )
    common.add_argument("--workers", type=int, default=None, help="Worker threads.")
    common.add_argument(
        "--no-ledger", action="store_true", help="Do not record the run in the DuckDB ledger."
    )
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging.")

    parser = _Parser(
        prog="giant-bic",
        description="Bound states in the continuum of giant atoms: spectra, dynamics, "
        "Bell and W state generation.",
    )
    commands = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    commands.add_parser("spectrum", parents=[common], help="Classify eigenstates versus g.")
    commands.add_parser("bic", parents=[common], help="BIC census and fidelity report.")
    commands.add_parser("disorder", parents=[common], help="Disorder Monte Carlo scan.")
    commands.add_parser("evolve", parents=[common], help="Master-equation trajectory.")
    commands.add_parser("bell", parents=[common], help="Bell-state drive protocol.")
    commands.add_parser("wstate", parents=[common], help="W-state drive protocol.")
    commands.add_parser("calibrate", parents=[common], help="Kernel prefactor calibration.")
    figure = commands.add_parser("figure", parents=[common], help="Reproduce a figure dataset.")
    figure.add_argument("name", choices=FIGURE_NAMES)
    return parser


# --------------------------------------------------------------------------- #
# Subcommands
# --------------------------------------------------------------------------- #
def _writer(name: str, out: Path, config: RunConfig) -> DatasetWriter:
    return DatasetWriter(
        root=out / name, subcommand=name, config=config.resolved(), seed=config.seed
    )


def _finish(writer: DatasetWriter, started: float, **extra: object) -> CommandResult:
    writer.write_metadata(wall_time_seconds=time.perf_counter() - started, extra=extra)
    return CommandResult(writer.root, dict(writer.summaries))


def _spectrum(config: RunConfig, out: Path, args: argparse.Namespace) -> CommandResult:
    started = time.perf_counter()
    exp = config.experiment
    frame = spectrum_sweep(
        config.system_spec(),
        exp.g_values,
        tol_loc=exp.tol_loc,
        guard=exp.guard,
        band_margin=exp.band_margin,
        workers=args.workers,
    )
    writer = _writer("spectrum", out, config)
    writer.write_panel("spectrum", frame)
    last = frame[frame["g"] == frame["g"].max()]
    writer.add_summary(**{f"n_{k}": v for k, v in last.groupby("class").size().items()})
    return _finish(writer, started)


def _bic(config: RunConfig, out: Path, _args: argparse.Namespace) -> CommandResult:
    started = time.perf_counter()
    exp = config.experiment
    report = bic_report(
        config.system_spec(), tol_loc=exp.tol_loc, guard=exp.guard, band_margin=exp.band_margin
    )
    payload = report.as_dict()
    print(f"BIC count:            {report.n_bic}")
    print(f"BOC above / below:    {report.n_boc_above} / {report.n_boc_below}")
    if report.bic is not None:
        print(f"BIC energy:           {report.bic.energy:.12g}")
        print(f"Localization metric:  {report.bic.localization_metric:.3e}")
        print(f"Photonic weight:      {report.photonic_weight:.6f}")
        print(f"F (vacuum-cond.):     {report.fidelity_conditional:.6f}")
        print(f"F (traced):           {report.fidelity_traced:.6f}")

    writer = _writer("bic", out, config)
    writer.write_document("bic", payload)
    writer.add_summary(
        **{
            k: v
            for k, v in payload.items()
            if isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
        }
    )
    return _finish(writer, started)


def _disorder(config: RunConfig, out: Path, args: argparse.Namespace) -> CommandResult:
    started = time.perf_counter()
    spec = config.system_spec()
    exp = config.experiment
    writer = _writer("disorder", out, config)
    for kind in config.disorder.kinds:
        scan = disorder_fidelity_scan(
            spec,
            config.disorder_spec(kind),
            config.disorder.delta_grid,
            reduction=exp.reduction,
            tol_loc=exp.tol_loc,
            guard=exp.guard,
            band_margin=exp.band_margin,
            workers=args.workers,
        )
        writer.write_panel(kind, scan.summary)
        writer.write_panel(f"{kind}_realizations", scan.realizations)
        last = scan.summary.iloc[-1]
        if math.isfinite(last["mean_F"]):
            writer.add_summary(**{f"mean_F_{kind}": last["mean_F"]})
        writer.add_summary(**{f"n_flagged_{kind}": scan.n_flagged})
    return _finish(writer, started)


def _release_time(config: RunConfig) -> float:
    """Drive switch-off time for ``evolve``; ``inf`` keeps the drive on."""
    t0 = config.drive.t0
    if t0 == "never":
        return math.inf
    if t0 != "auto":
        return float(t0)
    named = config.named_configuration()
    if named is None:
        raise ValueError("drive.t0 = 'auto' needs a named configuration")
    search = find_optimal_duration(
        named,
        config.drive.eta,
        config.drive.search_window,
        target=symmetric_state(named.n_atoms),
        drive_atom=config.drive.target_atom,
        local_decay=config.experiment.local_decay,
    )
    return search.t_max


def _evolve(config: RunConfig, out: Path, _args: argparse.Namespace) -> CommandResult:
    started = time.perf_counter()
    spec = config.system_spec()
    exp = config.experiment
    wg = spec.waveguide
    kernel = coupling_matrix(spec.atoms, wg.xi, omega_c=wg.omega_c)

    drive: DriveSpec | None = None
    if config.drive.eta > 0:
        drive = config.drive_spec(t0=_release_time(config))
    generator = lindblad_generator(kernel, drive, local_decay=exp.local_decay)
    times = np.arange(0.0, exp.t_end + 0.5 * exp.step, exp.step)
    trajectory = evolve(
        initial_state(exp.initial_amplitudes, spec.n_atoms),
        generator,
        times,
        {"symmetric": symmetric_state(spec.n_atoms)},
    )

    writer = _writer("evolve", out, config)
    writer.write_panel("trajectory", trajectory.to_frame())
    final = {k: float(v[-1]) for k, v in trajectory.observables.items()}
    writer.add_summary(
        F_final=final["fidelity_symmetric"], excitation_number_final=final["excitation_number"]
    )
    return _finish(
        writer,
        started,
        release_time=None if drive is None or math.isinf(drive.t0) else drive.t0,
    )


def _protocol_configuration(config: RunConfig, default: str) -> NamedConfiguration:
    if config.atoms:
        raise ValueError("drive protocols run on a named configuration, not explicit [[atoms]]")
    named = config.named_configuration()
    if named is not None:
        return named
    wg = config.waveguide
    return build_configuration(
        default,
        g=config.experiment.g,
        n_sites=wg.n_sites,
        omega_c=wg.omega_c,
        xi=wg.xi,
        boundary=wg.boundary,
        **config.geometry,
    )


def _run_protocol(
    name: str,
    protocol: Callable[..., ProtocolResult],
    default: str,
    config: RunConfig,
    out: Path,
) -> CommandResult:
    started = time.perf_counter()
    named = _protocol_configuration(config, default)
    t0 = config.drive.t0
    result = protocol(
        named,
        config.drive.eta,
        None if t0 == "never" else t0,
        config.experiment.t_end,
        drive_atom=config.drive.target_atom,
        step=config.experiment.step,
        search_window=config.drive.search_window,
        local_decay=config.experiment.local_decay,
    )
    print(
        f"{named.name}: t_max={result.t_max:.4f}  F_max={result.f_max:.6f}  "
        f"F_final={result.f_final:.6f}"
    )
    writer = _writer(name, out, config)
    writer.write_panel("trajectory", result.trajectory.to_frame())
    writer.add_summary(**result.summary())
    return _finish(writer, started, protocol=result.metadata)


def _bell(config: RunConfig, out: Path, _args: argparse.Namespace) -> CommandResult:
    return _run_protocol("bell", bell_protocol, "braided2", config, out)


def _wstate(config: RunConfig, out: Path, _args: argparse.Namespace) -> CommandResult:
    return _run_protocol("wstate", w_protocol, "braided3", config, out)


def _calibrate(config: RunConfig, out: Path, _args: argparse.Namespace) -> CommandResult:
    started = time.perf_counter()
    report = run_calibration()
    print_report(report)
    if not report.passed:
        logger.warning("Calibration outside tolerance; see calibration.json")
    writer = _writer("calibrate", out, config)
    writer.write_document("calibration", report_dict(report))
    writer.add_summary(prefactor_ratio=report.prefactor_ratio, passed=float(report.passed))
    return _finish(writer, started)


def _figure(config: RunConfig, out: Path, args: argparse.Namespace) -> CommandResult:
    result = reproduce_figure(args.name, config, out, workers=args.workers)
    finite = {k: v for k, v in result.summary.items() if math.isfinite(v)}
    return CommandResult(result.output_dir or out / args.name, finite)


HANDLERS: dict[str, Callable[[RunConfig, Path, argparse.Namespace], CommandResult]] = {
    "spectrum": _spectrum,
    "bic": _bic,
    "disorder": _disorder,
    "evolve": _evolve,
    "bell": _bell,
    "wstate": _wstate,
    "calibrate": _calibrate,
    "figure": _figure,
}


# --------------------------------------------------------------------------- #
# Entry point
# --------------------------------------------------------------------------- #
def _ledger_name(args: argparse.Namespace) -> str:
    return f"figure {args.name}" if args.subcommand == "figure" else args.subcommand


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run one subcommand and return its exit code."""
    args = build_parser().parse_args(argv)
    if args.verbose:
        logger.setLevel(logging.DEBUG)
    out = Path(args.out) if args.out is not None else OUT_DIR

    try:
        config = load_run_config(args.config, args.overrides, seed=args.seed)
    except ValueError as exc:
        logger.error("Invalid configuration: %s", exc)
        return EXIT_INVALID

    ledger = RunLedger(out / LEDGER_FILENAME) if LEDGER_ENABLED and not args.no_ledger else None
    run_id = (
        ledger.start_run(_ledger_name(args), config_hash(config.resolved()), config.seed, out)
        if ledger is not None
        else None
    )

    started = time.perf_counter()
    status, code, error = "success", EXIT_OK, None
    result: CommandResult | None = None
    try:
        result = HANDLERS[args.subcommand](config, out, args)
    except NumericalError as exc:
        logger.exception("Numerical failure in %s", args.subcommand)
        status, code, error = "numerical_error", EXIT_NUMERICAL, str(exc)
    except ValueError as exc:
        logger.error("Invalid input for %s: %s", args.subcommand, exc)
        status, code, error = "invalid", EXIT_INVALID, str(exc)
    finally:
        if ledger is not None and run_id is not None:
            if result is not None:
                ledger.record_summary(run_id, result.summary)
            ledger.finish_run(
                run_id,
                status=status,
                exit_code=code,
                wall_time_seconds=time.perf_counter() - started,
                error_message=error,
            )
            ledger.close()

    if result is not None:
        logger.info("%s finished, outputs in %s", args.subcommand, result.output_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
