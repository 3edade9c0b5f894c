"""Exception hierarchy shared by the simulation modules and the CLI."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .validator import ValidationReport


class GiantBICError(Exception):
    """Base class for all errors raised by this package."""


class SpecValidationError(GiantBICError, ValueError):
    """Physical specification failed validation."""

    def __init__(self, report: ValidationReport) -> None:
        self.report = report
        super().__init__("; ".join(report.messages) or "invalid specification")


class ConfigError(GiantBICError, ValueError):
    """Run document or command-line override could not be parsed."""


class ConfigurationMismatchError(GiantBICError, ValueError):
    """A protocol received a configuration with the wrong number of atoms."""


class KernelValidityError(GiantBICError, ValueError):
    """Coupling kernel requested outside band-centre resonance."""


class NumericalError(GiantBICError, RuntimeError):
    """Eigensolver, integrator or density-matrix invariant failure."""


class OracleGuardError(NumericalError):
    """Ring too small: the emitted wavefront would wrap around."""

    def __init__(self, required_sites: int, n_sites: int) -> None:
        self.required_sites = required_sites
        super().__init__(
            f"ring of {n_sites} sites is too small; need at least {required_sites}"
        )


class NoMaximumError(NumericalError):
    """No interior local maximum in the scanned fidelity curve."""

    def __init__(self, message: str, curve: Any = None) -> None:
        self.curve = curve
        super().__init__(message)
