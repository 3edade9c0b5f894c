"""Exact single-excitation dynamics used to validate the Markovian kernel."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence

import numpy as np
from scipy import sparse

from ..core.errors import NumericalError, OracleGuardError
from ..core.integrator import Segment, integrate_piecewise
from ..core.lindblad import Trajectory, observe
from ..core.model import (
    SingleExcitationState,
    SystemSpec,
    build_single_excitation_hamiltonian,
)
from ..core.spectral import reduced_atomic_density
from ..utils.config import ODE_METHOD, ORACLE_ATOL, ORACLE_RTOL
from ..utils.logger import logger
from .configurations import centered_spec

NORM_DRIFT_LIMIT = 1e-9


def required_sites(spec: SystemSpec, t_end: float) -> int:
    """Smallest ring on which the two wavefronts (speed ``2 xi``) cannot meet by ``t_end``."""
    lo, hi = spec.atomic_region()
    return int(math.floor(4.0 * spec.waveguide.xi * t_end + (hi - lo))) + 1


def _resized(spec: SystemSpec, n_sites: int) -> SystemSpec:
    """Same atoms re-centred on a clean ring of ``n_sites`` sites."""
    wg = spec.waveguide
    centred = centered_spec(
        [atom.legs for atom in spec.atoms],
        g=[atom.g for atom in spec.atoms],
        n_sites=n_sites,
        omega_c=wg.omega_c,
        xi=wg.xi,
        boundary=wg.boundary,
    )
    atoms = tuple(
        new.model_copy(update={"omega": old.omega})
        for new, old in zip(centred.atoms, spec.atoms)
    )
    return centred.model_copy(update={"atoms": atoms})


def oracle_spec(
    spec: SystemSpec, t_end: float, n_sites_override: int | None = None
) -> SystemSpec:
    """Resolve the lattice used for an oracle run of length ``t_end``.

    Without an override a clean ring grows to the required size. An explicit
    ``n_sites_override`` (or a disordered lattice that cannot be resized)
    that is too small raises :class:`OracleGuardError`.
    """
    needed = required_sites(spec, t_end)
    if n_sites_override is not None:
        if n_sites_override < needed:
            raise OracleGuardError(needed, n_sites_override)
        return _resized(spec, n_sites_override)
    if spec.waveguide.n_sites >= needed:
        return spec
    if not spec.waveguide.is_clean:
        raise OracleGuardError(needed, spec.waveguide.n_sites)
    return _resized(spec, needed)


def oracle_exact_dynamics(
    spec: SystemSpec,
    amplitudes: Sequence[complex],
    t_end: float,
    n_sites_override: int | None = None,
    *,
    t_grid: Sequence[float] | np.ndarray | None = None,
    step: float = 0.5,
    targets: Mapping[str, np.ndarray] | None = None,
    rtol: float = ORACLE_RTOL,
    atol: float = ORACLE_ATOL,
    method: str = ODE_METHOD,
) -> Trajectory:
    """Schrodinger evolution of atoms plus waveguide from a one-excitation state.

    The photon field starts in the vacuum. The trajectory carries the traced
    atomic density matrices, the usual observables, the atomic amplitudes
    (``amplitude_<i>_re``/``_im``), ``atomic_population`` and ``norm``.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    resolved = oracle_spec(spec, t_end, n_sites_override)
    m = resolved.n_atoms
    c = np.asarray(amplitudes, dtype=complex)
    if c.size != m:
        raise ValueError(f"expected {m} atomic amplitudes, got {c.size}")
    norm = np.linalg.norm(c)
    if norm == 0:
        raise ValueError("initial amplitudes must not all vanish")

    h = sparse.csr_matrix(build_single_excitation_hamiltonian(resolved))
    psi0 = np.zeros(resolved.dimension, dtype=complex)
    psi0[:m] = c / norm
    times = (
        np.arange(0.0, t_end + 0.5 * step, step)
        if t_grid is None
        else np.asarray(t_grid, dtype=float)
    )
    times = times[times <= t_end]

    logger.info(
        "Exact oracle: %d atoms on %d sites up to t=%.4g",
        m,
        resolved.waveguide.n_sites,
        t_end,
    )
    solution = integrate_piecewise(
        [Segment(0.0, float(t_end), -1j * h)],
        psi0,
        times,
        rtol=rtol,
        atol=atol,
        method=method,
    )

    norms = np.sum(np.abs(solution.states) ** 2, axis=1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > NORM_DRIFT_LIMIT:
        raise NumericalError(f"oracle norm drift {drift:.3e} exceeds {NORM_DRIFT_LIMIT}")

    states = []
    rows = []
    for vector in solution.states:
        excitation = SingleExcitationState.from_vector(vector / np.linalg.norm(vector), m)
        rho = reduced_atomic_density(excitation, m)
        states.append(rho)
        row = observe(rho, targets)
        row["atomic_population"] = excitation.atomic_weight
        for i, amp in enumerate(excitation.atomic_amps):
            row[f"amplitude_{i}_re"] = float(amp.real)
            row[f"amplitude_{i}_im"] = float(amp.imag)
        rows.append(row)
    observables = {name: np.array([row[name] for row in rows]) for name in rows[0]}
    observables["norm"] = norms
    return Trajectory(times=times, states=states, observables=observables)
