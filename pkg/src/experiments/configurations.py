"""Named giant-atom geometries.

Geometry parameters (all in lattice sites):

* ``n``: leg separation of each atom (atom size),
* ``delta_x``: offset between the first legs of atoms 1 and 2,
* ``delta_s``: gap between the last leg of atom 1 and the first leg of atom 3,
* ``n_inner``: size of the inner atom of the nested pair.

Legs are laid out relative to ``x1 = 0`` and the whole group is then centred
on the ring.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal, get_args

from ..core.model import Boundary, GiantAtomSpec, SystemSpec, WaveguideSpec
from ..utils.config import DEFAULT_N_SITES

ConfigurationName = Literal["braided2", "separate2", "nested2", "braided3"]
CONFIGURATION_NAMES: tuple[str, ...] = get_args(ConfigurationName)

DEFAULT_GEOMETRY: dict[str, dict[str, int]] = {
    "braided2": {"delta_x": 2, "n": 8},
    "separate2": {"delta_x": 10, "n": 8},
    "nested2": {"delta_x": 2, "n": 8, "n_inner": 4},
    "braided3": {"delta_x": 2, "delta_s": 2, "n": 8},
}


def relative_legs(name: str, geometry: dict[str, int]) -> list[tuple[int, ...]]:
    """Legs of every atom with the first leg of atom 1 at site 0."""
    n = geometry["n"]
    dx = geometry["delta_x"]
    if name in ("braided2", "separate2"):
        return [(0, n), (dx, dx + n)]
    if name == "nested2":
        return [(0, n), (dx, dx + geometry["n_inner"])]
    if name == "braided3":
        x3 = n + geometry["delta_s"]
        return [(0, n), (dx, dx + n), (x3, x3 + n)]
    raise ValueError(f"unknown configuration {name!r}; expected one of {CONFIGURATION_NAMES}")


def centered_spec(
    legs: Sequence[Sequence[int]],
    *,
    g: float | Sequence[float] = 0.5,
    n_sites: int = DEFAULT_N_SITES,
    omega_c: float = 0.0,
    xi: float = 1.0,
    boundary: Boundary = "ring",
) -> SystemSpec:
    """Place atoms with the given relative legs in the middle of the lattice.

    Every atom is resonant with the band centre ``omega_c``.
    """
    couplings = [float(g)] * len(legs) if isinstance(g, (int, float)) else list(g)
    if len(couplings) != len(legs):
        raise ValueError("one coupling per atom is required")
    lowest = min(min(atom_legs) for atom_legs in legs)
    extent = max(max(atom_legs) for atom_legs in legs) - lowest
    shift = (n_sites - 1 - extent) // 2 - lowest
    atoms = tuple(
        GiantAtomSpec(omega=omega_c, legs=tuple(leg + shift for leg in atom_legs), g=coupling)
        for atom_legs, coupling in zip(legs, couplings)
    )
    waveguide = WaveguideSpec(n_sites=n_sites, omega_c=omega_c, xi=xi, boundary=boundary)
    return SystemSpec(waveguide=waveguide, atoms=atoms)


@dataclass(frozen=True)
class NamedConfiguration:
    """One of the reference geometries together with its resolved system."""

    name: str
    spec: SystemSpec
    geometry: dict[str, int] = field(default_factory=dict)

    @property
    def n_atoms(self) -> int:
        return self.spec.n_atoms

    @property
    def g(self) -> float:
        return self.spec.atoms[0].g

    def with_sites(self, n_sites: int) -> NamedConfiguration:
        """Same geometry re-centred on a lattice of ``n_sites``."""
        wg = self.spec.waveguide
        return build_configuration(
            self.name,
            g=self.g,
            n_sites=n_sites,
            omega_c=wg.omega_c,
            xi=wg.xi,
            boundary=wg.boundary,
            **self.geometry,
        )

    def with_coupling(self, g: float) -> NamedConfiguration:
        return NamedConfiguration(self.name, self.spec.with_coupling(g), dict(self.geometry))


def build_configuration(
    name: str,
    *,
    g: float = 0.5,
    n_sites: int = DEFAULT_N_SITES,
    omega_c: float = 0.0,
    xi: float = 1.0,
    boundary: Boundary = "ring",
    **geometry: int,
) -> NamedConfiguration:
    """Resolve a named configuration; ``geometry`` overrides the default sizes."""
    if name not in DEFAULT_GEOMETRY:
        raise ValueError(f"unknown configuration {name!r}; expected one of {CONFIGURATION_NAMES}")
    unknown = set(geometry) - set(DEFAULT_GEOMETRY[name])
    if unknown:
        raise ValueError(f"{name} does not take geometry keys {sorted(unknown)}")
    resolved = {**DEFAULT_GEOMETRY[name], **{k: int(v) for k, v in geometry.items()}}
    spec = centered_spec(
        relative_legs(name, resolved),
        g=g,
        n_sites=n_sites,
        omega_c=omega_c,
        xi=xi,
        boundary=boundary,
    )
    return NamedConfiguration(name=name, spec=spec, geometry=resolved)


def single_giant_atom(
    legs: Sequence[int] = (0, 8),
    *,
    g: float = 0.1,
    n_sites: int = DEFAULT_N_SITES,
    xi: float = 1.0,
) -> SystemSpec:
    """One atom with the given relative legs, used for kernel calibration."""
    return centered_spec([tuple(legs)], g=g, n_sites=n_sites, xi=xi)
