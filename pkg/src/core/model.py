"""Physical specification types and the single-excitation Hamiltonian.

Basis ordering used everywhere downstream: indices ``0..M-1`` are the atomic
excitations (atoms in listed order), indices ``M..M+n_sites-1`` are the photon
sites of the coupled-resonator waveguide. Energies are in units of the hopping
``xi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Annotated, Literal

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict

Boundary = Literal["ring", "open"]


def _as_float_tuple(value: object) -> object:
    if value is None:
        return None
    if isinstance(value, (list, tuple, np.ndarray)):
        return tuple(float(x) for x in np.asarray(value, dtype=float).ravel())
    return value


Offsets = Annotated[tuple[float, ...] | None, BeforeValidator(_as_float_tuple)]


class WaveguideSpec(BaseModel):
    """Tight-binding chain of resonators: ``w_c sum a+a - (xi + dxi_j)(a+_{j+1} a_j + h.c.)``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_sites: int
    omega_c: float = 0.0
    xi: float = 1.0
    boundary: Boundary = "ring"
    onsite_offsets: Offsets = None
    hopping_offsets: Offsets = None

    @property
    def n_bonds(self) -> int:
        return self.n_sites if self.boundary == "ring" else self.n_sites - 1

    @property
    def onsite(self) -> np.ndarray:
        if self.onsite_offsets is None:
            return np.zeros(self.n_sites)
        return np.asarray(self.onsite_offsets, dtype=float)

    @property
    def hopping(self) -> np.ndarray:
        if self.hopping_offsets is None:
            return np.zeros(self.n_bonds)
        return np.asarray(self.hopping_offsets, dtype=float)

    @property
    def is_clean(self) -> bool:
        return not (np.any(self.onsite != 0.0) or np.any(self.hopping != 0.0))

    def with_offsets(
        self,
        *,
        onsite: np.ndarray | None = None,
        hopping: np.ndarray | None = None,
    ) -> WaveguideSpec:
        """Return a copy carrying the given disorder offsets."""
        update: dict[str, object] = {}
        if onsite is not None:
            update["onsite_offsets"] = _as_float_tuple(onsite)
        if hopping is not None:
            update["hopping_offsets"] = _as_float_tuple(hopping)
        return self.model_copy(update=update)


class GiantAtomSpec(BaseModel):
    """Two-level emitter coupled with strength ``g`` at every site in ``legs``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    omega: float = 0.0
    legs: tuple[int, ...]
    g: float = 0.5

    @property
    def span(self) -> tuple[int, int]:
        return min(self.legs), max(self.legs)


class SystemSpec(BaseModel):
    """Waveguide plus ``M`` giant atoms: ``H = H_a + H_c + H_I``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    waveguide: WaveguideSpec
    atoms: tuple[GiantAtomSpec, ...] = ()

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def dimension(self) -> int:
        return self.n_atoms + self.waveguide.n_sites

    def atomic_region(self, guard: int = 0) -> tuple[int, int]:
        """Inclusive site interval ``[min leg - guard, max leg + guard]``."""
        legs = [leg for atom in self.atoms for leg in atom.legs]
        return min(legs) - guard, max(legs) + guard

    def with_waveguide(self, waveguide: WaveguideSpec) -> SystemSpec:
        return self.model_copy(update={"waveguide": waveguide})

    def with_coupling(self, g: float) -> SystemSpec:
        """Copy with every atom's coupling set to ``g``."""
        atoms = tuple(atom.model_copy(update={"g": float(g)}) for atom in self.atoms)
        return self.model_copy(update={"atoms": atoms})

    def shifted(self, energy: float) -> SystemSpec:
        """Copy with ``omega_c`` and every ``omega`` shifted by ``energy``."""
        wg = self.waveguide.model_copy(
            update={"omega_c": self.waveguide.omega_c + energy}
        )
        atoms = tuple(
            atom.model_copy(update={"omega": atom.omega + energy})
            for atom in self.atoms
        )
        return self.model_copy(update={"waveguide": wg, "atoms": atoms})


@dataclass(frozen=True, slots=True)
class SingleExcitationState:
    """Amplitudes ``c_i`` (atom i excited) and ``f_j`` (photon on site j)."""

    atomic_amps: np.ndarray
    photonic_amps: np.ndarray
    energy: float | None = None

    @classmethod
    def from_vector(
        cls, vector: np.ndarray, n_atoms: int, energy: float | None = None
    ) -> SingleExcitationState:
        vector = np.asarray(vector, dtype=complex)
        return cls(
            atomic_amps=vector[:n_atoms].copy(),
            photonic_amps=vector[n_atoms:].copy(),
            energy=None if energy is None else float(energy),
        )

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.atomic_amps, self.photonic_amps])

    @property
    def atomic_weight(self) -> float:
        return float(np.sum(np.abs(self.atomic_amps) ** 2))

    @property
    def photonic_weight(self) -> float:
        return float(np.sum(np.abs(self.photonic_amps) ** 2))

    @property
    def norm_squared(self) -> float:
        return self.atomic_weight + self.photonic_weight


def dispersion(k: float | np.ndarray, wg: WaveguideSpec) -> float | np.ndarray:
    """Band ``w_k = w_c - 2 xi cos k`` of the clean lattice."""
    if not wg.is_clean:
        raise ValueError("dispersion is defined for the clean lattice only")
    result = wg.omega_c - 2.0 * wg.xi * np.cos(k)
    return float(result) if np.ndim(result) == 0 else result


def build_lattice_hamiltonian(wg: WaveguideSpec) -> np.ndarray:
    """Bare waveguide block, ``n_sites x n_sites``."""
    n = wg.n_sites
    h = np.diag(wg.omega_c + wg.onsite)
    hops = -(wg.xi + wg.hopping)
    idx = np.arange(n - 1)
    h[idx, idx + 1] = hops[: n - 1]
    h[idx + 1, idx] = hops[: n - 1]
    if wg.boundary == "ring":
        h[n - 1, 0] = hops[n - 1]
        h[0, n - 1] = hops[n - 1]
    return h


def build_single_excitation_hamiltonian(spec: SystemSpec) -> np.ndarray:
    """Real symmetric ``(M + n_sites)`` square matrix in the atoms-first basis."""
    # Imported here: validator depends on the types above.
    from .errors import SpecValidationError
    from .validator import validate_spec

    report = validate_spec(spec, require_atoms=False)
    if not report.ok:
        raise SpecValidationError(report)

    m = spec.n_atoms
    h = np.zeros((spec.dimension, spec.dimension))
    h[m:, m:] = build_lattice_hamiltonian(spec.waveguide)
    for i, atom in enumerate(spec.atoms):
        h[i, i] = atom.omega
        for leg in atom.legs:
            h[i, m + leg] += atom.g
            h[m + leg, i] += atom.g
    return h
