"""Validation of physical specifications.

Validation is report-style: every violation is collected instead of stopping
at the first one, so a run document can be fixed in one pass.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from pydantic import ValidationError

from .model import SystemSpec


@dataclass(frozen=True, slots=True)
class Violation:
    """A single broken invariant."""

    code: str
    message: str


@dataclass
class ValidationReport:
    """Collected violations; empty means the specification is valid."""

    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def messages(self) -> list[str]:
        return [v.message for v in self.violations]

    def add(self, code: str, message: str) -> None:
        self.violations.append(Violation(code, message))

    def __len__(self) -> int:
        return len(self.violations)


def _check_waveguide(spec: SystemSpec, report: ValidationReport) -> None:
    wg = spec.waveguide
    if wg.n_sites < 3:
        report.add("n_sites", f"n_sites must be >= 3 (got {wg.n_sites})")
    if not wg.xi > 0:
        report.add("xi", f"hopping xi must be positive (got {wg.xi})")
    if not np.isfinite(wg.omega_c):
        report.add("omega_c", "omega_c must be finite")
    if wg.onsite_offsets is not None and len(wg.onsite_offsets) != wg.n_sites:
        report.add(
            "onsite_offsets",
            f"onsite_offsets length {len(wg.onsite_offsets)} != n_sites {wg.n_sites}",
        )
    if wg.hopping_offsets is not None and len(wg.hopping_offsets) != wg.n_bonds:
        report.add(
            "hopping_offsets",
            f"hopping_offsets length {len(wg.hopping_offsets)} != {wg.n_bonds} "
            f"bonds for {wg.boundary} boundary",
        )
    for name in ("onsite_offsets", "hopping_offsets"):
        values = getattr(wg, name)
        if values is not None and not np.all(np.isfinite(values)):
            report.add(name, f"{name} must be finite")


def _check_atoms(
    spec: SystemSpec, report: ValidationReport, require_atoms: bool
) -> None:
    if require_atoms and not spec.atoms:
        report.add("atoms", "at least one atom is required")
    n_sites = spec.waveguide.n_sites
    for index, atom in enumerate(spec.atoms):
        label = f"atom {index}"
        if not atom.legs:
            report.add("legs", f"{label}: legs must not be empty")
            continue
        if len(set(atom.legs)) != len(atom.legs):
            report.add("duplicate_leg", f"{label}: duplicate leg in {list(atom.legs)}")
        elif any(b <= a for a, b in zip(atom.legs, atom.legs[1:])):
            report.add("leg_order", f"{label}: legs must be strictly increasing")
        bad = [leg for leg in atom.legs if not 0 <= leg < n_sites]
        if bad:
            report.add("leg_range", f"{label}: leg out of range {bad} for {n_sites} sites")
        if not atom.g >= 0:
            report.add("g", f"{label}: coupling g must be >= 0 (got {atom.g})")
        if not np.isfinite(atom.omega):
            report.add("omega", f"{label}: omega must be finite")


def validate_spec(
    spec: SystemSpec | Mapping[str, object], *, require_atoms: bool = True
) -> ValidationReport:
    """Return every violated invariant of ``spec`` (empty report = valid)."""
    report = ValidationReport()
    if not isinstance(spec, SystemSpec):
        try:
            spec = SystemSpec.model_validate(spec)
        except ValidationError as exc:
            for error in exc.errors():
                where = ".".join(str(part) for part in error["loc"])
                report.add("schema", f"{where}: {error['msg']}")
            return report

    _check_waveguide(spec, report)
    _check_atoms(spec, report, require_atoms)
    return report
