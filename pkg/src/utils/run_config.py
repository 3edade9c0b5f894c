"""Run documents: TOML files validated into :class:`RunConfig`.

Every physical quantity is a plain number in units of the hopping ``xi``
(frequencies) or ``1/xi`` (times). Example::

    seed = 7
    configuration = "braided2"

    [waveguide]
    n_sites = 201

    [experiment]
    g = 0.5
    t_end = 2000.0

    [drive]
    eta = 0.01
    t0 = "auto"
"""

from __future__ import annotations

import re
import tomllib
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..core.disorder import DisorderKind, DisorderSpec
from ..core.errors import ConfigError, SpecValidationError
from ..core.lindblad import DriveSpec
from ..core.model import GiantAtomSpec, SystemSpec, WaveguideSpec
from ..core.validator import validate_spec
from ..experiments.configurations import (
    ConfigurationName,
    NamedConfiguration,
    build_configuration,
)
from .config import BAND_MARGIN, DEFAULT_N_SITES, DISORDER_REALIZATIONS

_DIMENSIONAL = re.compile(r"^\s*[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?\s*[^\d\s.eE+-]")


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class WaveguideSection(_Section):
    n_sites: int = DEFAULT_N_SITES
    omega_c: float = 0.0
    xi: float = 1.0
    boundary: Literal["ring", "open"] = "ring"


class DisorderSection(_Section):
    kinds: list[DisorderKind] = Field(default_factory=lambda: ["onsite", "hopping"])
    delta_grid: list[float] = Field(
        default_factory=lambda: [0.0, 0.025, 0.05, 0.075, 0.1, 0.125, 0.15, 0.175, 0.2]
    )
    n_realizations: int = Field(default=DISORDER_REALIZATIONS, ge=1)


class DriveSection(_Section):
    target_atom: int = Field(default=0, ge=0)
    eta: float = Field(default=0.01, ge=0.0)
    etas: list[float] = Field(default_factory=lambda: [0.01, 0.05])
    omega_d: float = 0.0
    # "auto" searches the first fidelity maximum, "never" keeps the drive on.
    t0: float | Literal["auto", "never"] = "auto"
    search_window: float | None = None


class ExperimentSection(_Section):
    g: float = Field(default=0.5, ge=0.0)
    g_values: list[float] = Field(
        default_factory=lambda: [round(0.05 * k, 2) for k in range(21)]
    )
    t_end: float = Field(default=2000.0, gt=0.0)
    step: float = Field(default=1.0, gt=0.0)
    initial_amplitudes: list[float] | None = None
    local_decay: float = Field(default=0.0, ge=0.0)
    reduction: Literal["conditional", "trace"] = "conditional"
    tol_loc: float = Field(default=1e-4, gt=0.0)
    guard: int = Field(default=2, ge=0)
    band_margin: float = Field(default=BAND_MARGIN, ge=0.0)
    scattering_index: int | None = None


class RunConfig(_Section):
    """Validated run document."""

    seed: int = Field(default=0, ge=0, lt=2**64)
    configuration: ConfigurationName | None = None
    geometry: dict[str, int] = Field(default_factory=dict)
    waveguide: WaveguideSection = Field(default_factory=WaveguideSection)
    atoms: list[GiantAtomSpec] = Field(default_factory=list)
    disorder: DisorderSection = Field(default_factory=DisorderSection)
    drive: DriveSection = Field(default_factory=DriveSection)
    experiment: ExperimentSection = Field(default_factory=ExperimentSection)

    def named_configuration(self) -> NamedConfiguration | None:
        if self.atoms or self.configuration is None:
            return None
        wg = self.waveguide
        return build_configuration(
            self.configuration,
            g=self.experiment.g,
            n_sites=wg.n_sites,
            omega_c=wg.omega_c,
            xi=wg.xi,
            boundary=wg.boundary,
            **self.geometry,
        )

    def system_spec(self) -> SystemSpec:
        """Physical system described by the document, validated."""
        named = self.named_configuration()
        if named is not None:
            spec = named.spec
        elif self.atoms:
            wg = self.waveguide
            spec = SystemSpec(
                waveguide=WaveguideSpec(
                    n_sites=wg.n_sites, omega_c=wg.omega_c, xi=wg.xi, boundary=wg.boundary
                ),
                atoms=tuple(self.atoms),
            )
        else:
            raise ConfigError("run document needs either 'configuration' or [[atoms]]")
        report = validate_spec(spec)
        if not report.ok:
            raise SpecValidationError(report)
        return spec

    def drive_spec(self, eta: float | None = None, t0: float | None = None) -> DriveSpec:
        return DriveSpec(
            target_atom=self.drive.target_atom,
            eta=self.drive.eta if eta is None else eta,
            omega_d=self.drive.omega_d,
            **({} if t0 is None else {"t0": t0}),
        )

    def disorder_spec(self, kind: DisorderKind) -> DisorderSpec:
        return DisorderSpec(
            kind=kind, n_realizations=self.disorder.n_realizations, master_seed=self.seed
        )

    def resolved(self) -> dict[str, Any]:
        """JSON-ready document including the expanded atoms (hashed into metadata)."""
        payload = self.model_dump(mode="json")
        try:
            payload["resolved_atoms"] = [
                atom.model_dump(mode="json") for atom in self.system_spec().atoms
            ]
        except (ConfigError, SpecValidationError):
            payload["resolved_atoms"] = []
        return payload


# --------------------------------------------------------------------------- #
# Loading
# --------------------------------------------------------------------------- #
def _reject_dimensional(node: Any, path: str = "") -> None:
    if isinstance(node, dict):
        for key, value in node.items():
            _reject_dimensional(value, f"{path}.{key}" if path else str(key))
    elif isinstance(node, list):
        for index, value in enumerate(node):
            _reject_dimensional(value, f"{path}.{index}")
    elif isinstance(node, str) and _DIMENSIONAL.match(node):
        raise ConfigError(
            f"{path} = {node!r}: quantities are dimensionless (units of xi), drop the unit"
        )


def parse_override(expression: str) -> tuple[list[str], Any]:
    """Split ``section.key=value``; the value is parsed as a TOML literal."""
    if "=" not in expression:
        raise ConfigError(f"override must look like section.key=value: {expression!r}")
    key, raw = expression.split("=", 1)
    parts = [p.strip() for p in key.strip().split(".") if p.strip()]
    if not parts:
        raise ConfigError(f"empty override key in {expression!r}")
    try:
        value = tomllib.loads(f"value = {raw.strip()}")["value"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return parts, value


def apply_override(document: dict[str, Any], parts: list[str], value: Any) -> None:
    node: Any = document
    for depth, part in enumerate(parts[:-1]):
        if isinstance(node, list):
            try:
                node = node[int(part)]
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"bad list index {'.'.join(parts[: depth + 1])}") from exc
        else:
            node = node.setdefault(part, {})
    last = parts[-1]
    if isinstance(node, list):
        try:
            node[int(last)] = value
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"bad list index {'.'.join(parts)}") from exc
    elif isinstance(node, dict):
        node[last] = value
    else:
        raise ConfigError(f"cannot set {'.'.join(parts)}: parent is not a table")


def load_run_config(
    path: Path | str | None = None,
    overrides: list[str] | None = None,
    *,
    seed: int | None = None,
) -> RunConfig:
    """Read, override and validate a run document.

    ``path=None`` starts from an empty document (all defaults). ``seed``
    (from ``--seed``) wins over the document's ``seed``.
    """
    document: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            with path.open("rb") as stream:
                document = tomllib.load(stream)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    for expression in overrides or []:
        apply_override(document, *parse_override(expression))
    if seed is not None:
        document["seed"] = seed

    _reject_dimensional(document)
    try:
        return RunConfig.model_validate(document)
    except ValidationError as exc:
        messages = [
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
        ]
        raise ConfigError("; ".join(messages)) from exc
