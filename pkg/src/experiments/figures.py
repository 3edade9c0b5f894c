"""Dataset reproduction for every figure panel.

Each figure produces one or more tables (panels) plus scalar summaries. When
an output directory is given the tables are written as
``<out>/<figure>/<panel>.csv`` next to a ``metadata.json``.
"""

from __future__ import annotations

import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np
import pandas as pd

from ..core.disorder import disorder_fidelity_scan
from ..core.lindblad import (
    LindbladGenerator,
    coupling_matrix,
    dark_state_fidelity_limit,
    evolve,
    initial_state,
    lindblad_generator,
)
from ..core.parallel import ordered_map
from ..core.spectral import (
    StateClass,
    StateKind,
    classify_spectrum,
    single_excitation_vector,
    spectrum_sweep,
)
from ..export.exporters import DatasetWriter
from ..utils.config import FIGURE_NAMES
from ..utils.logger import logger
from ..utils.run_config import RunConfig
from .configurations import NamedConfiguration, build_configuration
from .protocols import (
    SEARCH_WINDOW_RABI_PERIODS,
    AutoDuration,
    ProtocolResult,
    bell_protocol,
    w_protocol,
)

FIG3_T_END = 1000.0


@dataclass
class FigureResult:
    """Tables and scalar summaries of one reproduced figure."""

    name: str
    panels: dict[str, pd.DataFrame] = field(default_factory=dict)
    summary: dict[str, float] = field(default_factory=dict)
    details: dict[str, object] = field(default_factory=dict)
    output_dir: Path | None = None


def _configuration(name: str, config: RunConfig) -> NamedConfiguration:
    wg = config.waveguide
    return build_configuration(
        name,
        g=config.experiment.g,
        n_sites=wg.n_sites,
        omega_c=wg.omega_c,
        xi=wg.xi,
        boundary=wg.boundary,
    )


def _eta_label(eta: float) -> str:
    return f"eta_{eta:g}"


def _release(config: RunConfig) -> float | AutoDuration | None:
    t0 = config.drive.t0
    if t0 == "never":
        return None
    return t0


def _protocol_frame(result: ProtocolResult) -> pd.DataFrame:
    frame = result.trajectory.to_frame()
    column = f"fidelity_{result.target}"
    keep = ["t", column, "excitation_number"]
    if "concurrence" in frame:
        keep.append("concurrence")
    return frame[keep].rename(columns={column: "fidelity"})


def _protocol_summary_frame(results: list[ProtocolResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "eta": r.metadata["eta"],
                "t_max": r.t_max,
                "F_max": r.f_max,
                "F_final": r.f_final,
            }
            for r in results
        ],
        columns=["eta", "t_max", "F_max", "F_final"],
    )


def _overlap(state: StateClass, reference: np.ndarray) -> float:
    amps = state.state.atomic_amps
    return float(abs(np.vdot(reference, amps)) ** 2 / np.sum(np.abs(amps) ** 2))


def scattering_state(
    classes: list[StateClass],
    energy: float,
    index: int | None = None,
    *,
    distinct_from: np.ndarray | None = None,
    max_overlap: float = 0.5,
    min_atomic_weight: float = 1e-6,
) -> StateClass:
    """In-band non-BIC eigenstate nearest ``energy`` that carries atomic weight.

    With ``distinct_from`` (atomic amplitudes, usually the BIC's) states whose
    normalized atomic part overlaps it by more than ``max_overlap`` are skipped
    when any other candidate exists. ``index`` selects an eigenstate directly.
    """
    if index is not None:
        if not 0 <= index < len(classes):
            raise ValueError(f"scattering_index {index} out of range [0, {len(classes)})")
        return classes[index]
    candidates = [
        c
        for c in classes
        if c.kind is StateKind.SCATTERING and c.atomic_weight > min_atomic_weight
    ]
    if not candidates:
        raise ValueError("no scattering state with atomic weight")
    if distinct_from is not None:
        reference = np.asarray(distinct_from, dtype=complex)
        reference = reference / np.linalg.norm(reference)
        distinct = [c for c in candidates if _overlap(c, reference) <= max_overlap]
        candidates = distinct or candidates
    return min(candidates, key=lambda c: abs(c.energy - energy))


# --------------------------------------------------------------------------- #
# Spectrum and disorder
# --------------------------------------------------------------------------- #
def _fig2a(config: RunConfig, workers: int | None) -> FigureResult:
    named = _configuration("braided2", config)
    exp = config.experiment
    frame = spectrum_sweep(
        named.spec,
        exp.g_values,
        tol_loc=exp.tol_loc,
        guard=exp.guard,
        band_margin=exp.band_margin,
        workers=workers,
    )
    counts = frame[frame["g"] == frame["g"].max()].groupby("class").size()
    return FigureResult(
        "fig2a",
        panels={"spectrum": frame},
        summary={f"n_{kind}_at_g_max": float(n) for kind, n in counts.items()},
    )


def _fig2b(config: RunConfig, workers: int | None) -> FigureResult:
    named = _configuration("braided2", config)
    exp = config.experiment
    result = FigureResult(
        "fig2b", details={"master_seed": config.seed, "reduction": exp.reduction}
    )
    realizations = []
    for kind in config.disorder.kinds:
        scan = disorder_fidelity_scan(
            named.spec,
            config.disorder_spec(kind),
            config.disorder.delta_grid,
            reduction=exp.reduction,
            tol_loc=exp.tol_loc,
            guard=exp.guard,
            band_margin=exp.band_margin,
            workers=workers,
        )
        result.panels[kind] = scan.summary
        realizations.append(scan.realizations)
        last = scan.summary.iloc[-1]
        result.summary[f"mean_F_{kind}"] = float(last["mean_F"])
        result.summary[f"std_F_{kind}"] = float(last["std_F"])
        for reduction in ("conditional", "traced"):
            result.summary[f"mean_F_{reduction}_{kind}"] = float(last[f"mean_F_{reduction}"])
            result.summary[f"std_F_{reduction}_{kind}"] = float(last[f"std_F_{reduction}"])
        result.summary[f"n_flagged_{kind}"] = float(scan.n_flagged)
    result.panels["realizations"] = pd.concat(realizations, ignore_index=True)
    return result


# --------------------------------------------------------------------------- #
# Free evolution of eigenstates
# --------------------------------------------------------------------------- #
def _own_state_fidelity(
    state: StateClass, *, generator: LindbladGenerator, times: np.ndarray, n_atoms: int
) -> np.ndarray:
    amps = state.state.atomic_amps
    target = single_excitation_vector(amps / np.linalg.norm(amps))
    trajectory = evolve(initial_state(amps, n_atoms), generator, times, {"initial": target})
    return trajectory.observables["fidelity_initial"]


def _fig3(config: RunConfig, workers: int | None) -> FigureResult:
    spec = _configuration("braided2", config).spec
    exp = config.experiment
    wg = spec.waveguide
    classes = classify_spectrum(spec, exp.tol_loc, guard=exp.guard, band_margin=exp.band_margin)
    bics = [c for c in classes if c.kind is StateKind.BIC]
    if not bics:
        raise ValueError(f"braided configuration has no BIC at g={exp.g}")
    bic = min(bics, key=lambda c: c.localization_metric)
    scattering = scattering_state(
        classes, wg.omega_c + wg.xi, exp.scattering_index, distinct_from=bic.state.atomic_amps
    )

    kernel = coupling_matrix(spec.atoms, wg.xi, omega_c=wg.omega_c)
    generator = lindblad_generator(kernel, local_decay=exp.local_decay)
    times = np.arange(0.0, FIG3_T_END + 0.5 * exp.step, exp.step)
    bic_curve, scattering_curve = ordered_map(
        partial(_own_state_fidelity, generator=generator, times=times, n_atoms=spec.n_atoms),
        [bic, scattering],
        workers=workers,
        desc="fig3",
    )
    frame = pd.DataFrame({"t": times, "bic": bic_curve, "scattering": scattering_curve})
    return FigureResult(
        "fig3",
        panels={"fidelity": frame},
        summary={
            "bic_min_fidelity": float(np.min(bic_curve)),
            "scattering_final_fidelity": float(scattering_curve[-1]),
            "scattering_dark_limit": dark_state_fidelity_limit(
                kernel, scattering.state.atomic_amps
            ),
        },
        details={
            "bic_energy": bic.energy,
            "scattering_energy": scattering.energy,
            "scattering_index": scattering.index,
        },
    )


# --------------------------------------------------------------------------- #
# Driven protocols
# --------------------------------------------------------------------------- #
Protocol = Callable[..., ProtocolResult]


def _protocol_options(config: RunConfig) -> dict[str, object]:
    return {
        "drive_atom": config.drive.target_atom,
        "step": config.experiment.step,
        "search_window": config.drive.search_window,
        "local_decay": config.experiment.local_decay,
    }


def _continuous(
    name: str, configuration: str, protocol: Protocol, config: RunConfig
) -> FigureResult:
    """Drive left on over ``10 / eta`` to show the first fidelity maximum."""
    named = _configuration(configuration, config)
    eta = config.drive.eta
    if not eta > 0:
        raise ValueError("continuous-drive figures need drive.eta > 0")
    options = _protocol_options(config)
    window = options.pop("search_window") or SEARCH_WINDOW_RABI_PERIODS / eta
    result = protocol(named, eta, None, window, **options)
    return FigureResult(
        name,
        panels={_eta_label(eta): _protocol_frame(result)},
        summary={"eta": eta, "t_max": result.t_max, "F_max": result.f_max},
        details={"configuration": named.name, "geometry": dict(named.geometry)},
    )


def _released(
    name: str,
    configuration: str,
    protocol: Protocol,
    config: RunConfig,
    workers: int | None,
) -> FigureResult:
    """Drive until ``t0`` (first maximum by default) for every ``eta``."""
    named = _configuration(configuration, config)
    etas = list(config.drive.etas)
    results = ordered_map(
        lambda eta: protocol(
            named, eta, _release(config), config.experiment.t_end, **_protocol_options(config)
        ),
        etas,
        workers=workers,
        desc=name,
    )
    result = FigureResult(
        name, details={"configuration": named.name, "geometry": dict(named.geometry)}
    )
    for eta, run in zip(etas, results):
        label = _eta_label(eta)
        result.panels[label] = _protocol_frame(run)
        result.summary.update({f"{key}_{label}": value for key, value in run.summary().items()})
    result.panels["summary"] = _protocol_summary_frame(results)
    return result


def _fig4a(config: RunConfig, _workers: int | None) -> FigureResult:
    return _continuous("fig4a", "braided2", bell_protocol, config)


def _fig4b(config: RunConfig, workers: int | None) -> FigureResult:
    return _released("fig4b", "braided2", bell_protocol, config, workers)


def _fig5a(config: RunConfig, workers: int | None) -> FigureResult:
    return _released("fig5a", "separate2", bell_protocol, config, workers)


def _fig5b(config: RunConfig, workers: int | None) -> FigureResult:
    return _released("fig5b", "nested2", bell_protocol, config, workers)


def _fig6b(config: RunConfig, _workers: int | None) -> FigureResult:
    return _continuous("fig6b", "braided3", w_protocol, config)


def _fig6c(config: RunConfig, workers: int | None) -> FigureResult:
    return _released("fig6c", "braided3", w_protocol, config, workers)


_FIGURES: dict[str, Callable[[RunConfig, int | None], FigureResult]] = {
    "fig2a": _fig2a,
    "fig2b": _fig2b,
    "fig3": _fig3,
    "fig4a": _fig4a,
    "fig4b": _fig4b,
    "fig5a": _fig5a,
    "fig5b": _fig5b,
    "fig6b": _fig6b,
    "fig6c": _fig6c,
}


def write_figure(
    result: FigureResult,
    out_dir: Path,
    config: RunConfig,
    *,
    wall_time_seconds: float | None = None,
) -> DatasetWriter:
    """Write panels and ``metadata.json`` under ``out_dir / result.name``."""
    writer = DatasetWriter(
        root=Path(out_dir) / result.name,
        subcommand=f"figure {result.name}",
        config=config.resolved(),
        seed=config.seed,
    )
    for panel, frame in result.panels.items():
        writer.write_panel(panel, frame)
    writer.add_summary(**{k: v for k, v in result.summary.items() if math.isfinite(v)})
    writer.write_metadata(wall_time_seconds=wall_time_seconds, extra=result.details)
    result.output_dir = writer.root
    return writer


def reproduce_figure(
    name: str,
    config: RunConfig | None = None,
    out_dir: Path | str | None = None,
    *,
    workers: int | None = None,
) -> FigureResult:
    """Compute the dataset behind figure ``name`` and optionally write it."""
    if name not in _FIGURES:
        raise ValueError(f"unknown figure {name!r}; choose from {', '.join(FIGURE_NAMES)}")
    config = config or RunConfig()
    logger.info("Reproducing %s", name)
    started = time.perf_counter()
    result = _FIGURES[name](config, workers)
    elapsed = time.perf_counter() - started
    logger.info("%s done in %.1fs (%d panels)", name, elapsed, len(result.panels))
    if out_dir is not None:
        write_figure(result, Path(out_dir), config, wall_time_seconds=elapsed)
    return result
