"""Markovian master equation for giant atoms coupled at band centre.

Density matrices are vectorized by column stacking, so a superoperator acting
as ``rho -> A rho B`` is the matrix ``kron(B.T, A)``.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from ..utils.config import MASTER_METHOD, ODE_ATOL, ODE_RTOL, TRACE_DRIFT_LIMIT
from ..utils.logger import logger
from .errors import KernelValidityError, NumericalError
from .integrator import PiecewiseSolution, integrate_piecewise, split_segments
from .model import GiantAtomSpec
from .spectral import (
    AtomicDensityMatrix,
    pure_state_fidelity,
    single_excitation_vector,
    uhlmann_fidelity,
)

GAMMA_PSD_TOL = 1e-10
TRAJECTORY_HERMITIAN_TOL = 1e-8
TRAJECTORY_POSITIVITY_TOL = 1e-8
RESONANCE_TOL = 1e-12

# i**d for d = 0, 1, 2, 3: exact phase of exp(i pi/2 d)
_QUARTER_PHASES = (1.0 + 0j, 1j, -1.0 + 0j, -1j)

_SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)


# --------------------------------------------------------------------------- #
# Coupling kernel
# --------------------------------------------------------------------------- #
@dataclass(frozen=True)
class CouplingKernel:
    """Collective kernel ``A``; ``gamma = Re A`` decays, ``exchange = Im A`` shifts."""

    matrix: np.ndarray
    prefactors: np.ndarray
    omega: float = 0.0

    @property
    def n_atoms(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def gamma(self) -> np.ndarray:
        return self.matrix.real.copy()

    @property
    def exchange(self) -> np.ndarray:
        return self.matrix.imag.copy()

    def decay_rates(self) -> np.ndarray:
        """Eigenvalues of ``gamma`` (collective decay channels), ascending."""
        return np.linalg.eigvalsh(self.gamma)


def phase_sum(legs_i: Sequence[int], legs_j: Sequence[int]) -> complex:
    """``sum_{p, q} exp(i pi/2 |p - q|)`` evaluated exactly."""
    return complex(sum(_QUARTER_PHASES[abs(p - q) % 4] for p in legs_i for q in legs_j))


def coupling_matrix(
    atoms: Sequence[GiantAtomSpec],
    xi: float = 1.0,
    *,
    omega_c: float = 0.0,
    prefactor_scale: float = 1.0,
) -> CouplingKernel:
    """Kernel ``A_ij = C_ij sum_{p in legs_i, q in legs_j} exp(i pi/2 |p - q|)``.

    ``C_ij = scale * g_i g_j / (2 xi)``. The phase ``pi/2`` per site is the
    band-centre wave number, so every atom must be resonant with ``omega_c``.
    """
    if not atoms:
        raise ValueError("coupling kernel needs at least one atom")
    if not xi > 0:
        raise ValueError(f"xi must be positive (got {xi})")
    off = [i for i, atom in enumerate(atoms) if abs(atom.omega - omega_c) > RESONANCE_TOL]
    if off:
        raise KernelValidityError(
            f"atoms {off} are detuned from omega_c={omega_c}; "
            "the kernel is only valid at band centre"
        )

    g = np.array([atom.g for atom in atoms], dtype=float)
    prefactors = prefactor_scale * np.outer(g, g) / (2.0 * xi)
    m = len(atoms)
    sums = np.array(
        [[phase_sum(atoms[i].legs, atoms[j].legs) for j in range(m)] for i in range(m)]
    )
    kernel = CouplingKernel(matrix=prefactors * sums, prefactors=prefactors, omega=omega_c)

    lowest = float(kernel.decay_rates()[0])
    if lowest < -GAMMA_PSD_TOL:
        raise KernelValidityError(f"decay matrix is not positive semidefinite ({lowest:.3e})")
    return kernel


def dark_subspace(kernel: CouplingKernel, tol: float = GAMMA_PSD_TOL) -> np.ndarray:
    """Orthonormal basis (columns, atomic amplitudes) of the null space of ``gamma``."""
    values, vectors = np.linalg.eigh(kernel.gamma)
    scale = max(1.0, float(np.max(np.abs(values))))
    return vectors[:, values <= tol * scale]


def dark_state_fidelity_limit(
    kernel: CouplingKernel,
    amplitudes: Sequence[complex],
    target: Sequence[complex] | None = None,
) -> float:
    """Long-time fidelity of an undriven single-excitation state.

    The bright part decays to ``|G>`` and the dark projection ``P c`` survives,
    so the fidelity toward a pure single-excitation ``target`` tends to
    ``|<target|P c>|`` (``target`` defaults to the normalized initial state).
    Valid when the exchange part acts trivially inside the dark subspace.
    """
    c = np.asarray(amplitudes, dtype=complex)
    c = c / np.linalg.norm(c)
    t = c if target is None else np.asarray(target, dtype=complex)
    t = t / np.linalg.norm(t)
    basis = dark_subspace(kernel)
    projected = basis @ (basis.conj().T @ c)
    return float(abs(np.vdot(t, projected)))


def t1_to_local_decay(t1: float) -> float:
    """Local decay rate (units of xi) for an energy-relaxation time ``t1`` (units of 1/xi)."""
    if not t1 > 0:
        raise ValueError(f"T1 must be positive (got {t1})")
    return 1.0 / t1


# --------------------------------------------------------------------------- #
# Generator
# --------------------------------------------------------------------------- #
class DriveSpec(BaseModel):
    """Coherent drive ``eta (sigma+ + sigma-)`` on one atom, switched off at ``t0``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    target_atom: int = Field(default=0, ge=0)
    eta: float = Field(ge=0.0)
    omega_d: float = 0.0
    t0: float = math.inf


def lowering_operators(n_atoms: int) -> list[np.ndarray]:
    """``sigma_i^-`` on the ``2**n_atoms`` space, one per atom."""
    eye = np.eye(2, dtype=complex)
    return [
        reduce(np.kron, [_SIGMA_MINUS if k == i else eye for k in range(n_atoms)])
        for i in range(n_atoms)
    ]


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(vector: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(vector).reshape(dim, dim, order="F")


def _commutator_superop(h: np.ndarray) -> np.ndarray:
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def _dissipator_superop(rates: np.ndarray, lowering: list[np.ndarray]) -> np.ndarray:
    """``sum_ij rates_ij (s_j rho s_i+ - 1/2 {s_i+ s_j, rho})``."""
    dim = lowering[0].shape[0]
    eye = np.eye(dim)
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i, s_i in enumerate(lowering):
        for j, s_j in enumerate(lowering):
            rate = rates[i, j]
            if rate == 0.0:
                continue
            s_i_dag = s_i.conj().T
            k = s_i_dag @ s_j
            out += rate * (
                np.kron(s_i_dag.T, s_j) - 0.5 * (np.kron(eye, k) + np.kron(k.T, eye))
            )
    return out


@dataclass(frozen=True)
class LindbladGenerator:
    """Piecewise-constant superoperator: ``driven`` before ``t0``, ``free`` after."""

    n_atoms: int
    free: np.ndarray
    hamiltonian: np.ndarray
    driven: np.ndarray | None = None
    t0: float = math.inf

    @property
    def dimension(self) -> int:
        return 2**self.n_atoms

    def at(self, t: float) -> np.ndarray:
        if self.driven is not None and t < self.t0:
            return self.driven
        return self.free

    def apply(self, rho: np.ndarray, t: float = math.inf) -> np.ndarray:
        """``d rho / dt`` at time ``t``."""
        return unvec(self.at(t) @ vec(rho), self.dimension)

    def switch_points(self) -> list[tuple[float, np.ndarray]]:
        if self.driven is None:
            return [(math.inf, self.free)]
        return [(self.t0, self.driven), (math.inf, self.free)]


def lindblad_generator(
    kernel: CouplingKernel,
    drive: DriveSpec | None = None,
    detuning: float | None = None,
    *,
    local_decay: float = 0.0,
) -> LindbladGenerator:
    """Master-equation generator in the frame rotating at the drive frequency.

    ``H = Delta sum n_i + sum_ij J_ij s_i+ s_j + eta (s_t+ + s_t)`` with the
    drive present only for ``t < t0``; the dissipator uses ``2 gamma`` plus
    ``local_decay`` on the diagonal. ``detuning`` defaults to
    ``omega - omega_d`` (zero without drive).
    """
    m = kernel.n_atoms
    if drive is not None and drive.target_atom >= m:
        raise ValueError(f"drive targets atom {drive.target_atom} of {m}")
    if local_decay < 0:
        raise ValueError("local_decay must be non-negative")
    if detuning is None:
        detuning = kernel.omega - drive.omega_d if drive is not None else 0.0

    lowering = lowering_operators(m)
    raising = [s.conj().T for s in lowering]
    exchange = kernel.exchange
    h = sum(
        (exchange[i, j] * raising[i] @ lowering[j] for i in range(m) for j in range(m)),
        start=np.zeros((2**m, 2**m), dtype=complex),
    )
    h = h + detuning * sum(raising[i] @ lowering[i] for i in range(m))
    rates = 2.0 * kernel.gamma + local_decay * np.eye(m)
    dissipator = _dissipator_superop(rates, lowering)
    free = _commutator_superop(h) + dissipator

    driven = None
    t0 = math.inf
    if drive is not None and drive.eta > 0 and drive.t0 > 0:
        target = drive.target_atom
        h_drive = drive.eta * (raising[target] + lowering[target])
        driven = _commutator_superop(h + h_drive) + dissipator
        t0 = drive.t0
    return LindbladGenerator(n_atoms=m, free=free, hamiltonian=h, driven=driven, t0=t0)


# --------------------------------------------------------------------------- #
# Observables
# --------------------------------------------------------------------------- #
def concurrence(rho: AtomicDensityMatrix | np.ndarray) -> float:
    """Wootters concurrence of a two-qubit state."""
    m = rho.matrix if isinstance(rho, AtomicDensityMatrix) else np.asarray(rho, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError("concurrence is defined for two qubits")
    sy = np.array([[0.0, -1j], [1j, 0.0]])
    flip = np.kron(sy, sy)
    tilde = flip @ m.conj() @ flip
    values = np.sqrt(np.clip(np.linalg.eigvals(m @ tilde).real, 0.0, None))
    values = np.sort(values)[::-1]
    return float(max(0.0, values[0] - values[1:].sum()))


def excitation_number(rho: AtomicDensityMatrix) -> float:
    """Expected number of excited atoms."""
    return float(sum(rho.excited_population(i) for i in range(rho.n_atoms)))


# --------------------------------------------------------------------------- #
# Trajectories
# --------------------------------------------------------------------------- #
@dataclass
class Trajectory:
    """Density matrices on a time grid plus named real observables."""

    times: np.ndarray
    states: list[AtomicDensityMatrix]
    observables: dict[str, np.ndarray] = field(default_factory=dict)
    solution: PiecewiseSolution | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if len(self.states) != self.times.size:
            raise ValueError("one state per time point is required")

    @property
    def n_atoms(self) -> int:
        return self.states[0].n_atoms if self.states else 0

    def state_at(self, t: float) -> AtomicDensityMatrix:
        """Interpolated state between grid points (needs dense output)."""
        if self.solution is None:
            raise RuntimeError("trajectory was computed without dense output")
        dim = 2**self.n_atoms
        return AtomicDensityMatrix(unvec(self.solution(t), dim), self.n_atoms)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"t": self.times})
        for name, series in self.observables.items():
            frame[name] = np.asarray(series, dtype=float)
        return frame

    def to_json(self, *, snapshots: bool = False) -> str:
        payload: dict[str, object] = {
            "times": self.times.tolist(),
            "observables": {
                name: np.asarray(series, dtype=float).tolist()
                for name, series in self.observables.items()
            },
        }
        if snapshots:
            payload["states"] = [
                {"real": s.matrix.real.tolist(), "imag": s.matrix.imag.tolist()}
                for s in self.states
            ]
        return json.dumps(payload, indent=2, sort_keys=True)


def _checked_state(matrix: np.ndarray, n_atoms: int, t: float) -> AtomicDensityMatrix:
    state = AtomicDensityMatrix(matrix, n_atoms)
    try:
        state.check(
            hermitian_tol=TRAJECTORY_HERMITIAN_TOL,
            trace_tol=TRACE_DRIFT_LIMIT,
            min_eigenvalue=-TRAJECTORY_POSITIVITY_TOL,
        )
    except NumericalError as exc:
        raise NumericalError(f"at t={t:.6g}: {exc}") from exc
    return AtomicDensityMatrix(0.5 * (matrix + matrix.conj().T), n_atoms)


def _target_fidelity(state: AtomicDensityMatrix, target: np.ndarray) -> float:
    if target.ndim == 1:
        return pure_state_fidelity(state, target)
    return uhlmann_fidelity(state, target)


def observe(
    state: AtomicDensityMatrix, targets: Mapping[str, np.ndarray] | None = None
) -> dict[str, float]:
    """Standard observables of one state: fidelities, populations, excitations."""
    values: dict[str, float] = {}
    for name, target in (targets or {}).items():
        values[f"fidelity_{name}"] = _target_fidelity(state, np.asarray(target, dtype=complex))
    for i in range(state.n_atoms):
        values[f"population_{i}"] = state.excited_population(i)
    values["ground_population"] = float(state.populations()[0])
    values["excitation_number"] = excitation_number(state)
    values["trace"] = state.trace
    if state.n_atoms == 2:
        values["concurrence"] = concurrence(state)
    return values


def evolve(
    rho0: AtomicDensityMatrix | np.ndarray,
    generator: LindbladGenerator,
    t_grid: Sequence[float] | np.ndarray,
    targets: Mapping[str, np.ndarray] | None = None,
    *,
    rtol: float = ODE_RTOL,
    atol: float = ODE_ATOL,
    method: str = MASTER_METHOD,
    dense_output: bool = False,
) -> Trajectory:
    """Integrate the master equation and record observables on ``t_grid``.

    ``targets`` maps names to pure states (vectors) or density matrices; each
    yields a ``fidelity_<name>`` series. The drive switch at ``t0`` is a
    segment boundary of the integration. ``method="expm"`` propagates each
    segment exactly; a :func:`scipy.integrate.solve_ivp` method name uses
    ``rtol``/``atol`` instead. Trace drift beyond the configured limit or loss
    of Hermiticity/positivity raises :class:`NumericalError`.
    """
    if isinstance(rho0, AtomicDensityMatrix):
        start = rho0
    else:
        matrix = np.asarray(rho0, dtype=complex)
        start = AtomicDensityMatrix(matrix, int(round(math.log2(matrix.shape[0]))))
    if start.n_atoms != generator.n_atoms:
        raise ValueError(
            f"initial state has {start.n_atoms} atoms, generator has {generator.n_atoms}"
        )
    start.check()

    times = np.asarray(t_grid, dtype=float)
    if times.size == 0 or times[0] < 0:
        raise ValueError("t_grid must be non-empty and start at t >= 0")
    segments = split_segments(generator.switch_points(), float(times[-1]))
    if not segments:
        segments = split_segments([(math.inf, generator.free)], max(float(times[-1]), 1e-12))

    solution = integrate_piecewise(
        segments,
        vec(start.matrix),
        times,
        rtol=rtol,
        atol=atol,
        method=method,
        dense_output=dense_output,
    )
    dim = generator.dimension
    states = [
        _checked_state(unvec(row, dim), generator.n_atoms, t)
        for t, row in zip(times, solution.states)
    ]
    rows = [observe(state, targets) for state in states]
    observables = {name: np.array([row[name] for row in rows]) for name in rows[0]}
    logger.debug(
        "Evolved %d-atom state to t=%.6g (%d RHS evaluations)",
        generator.n_atoms,
        times[-1],
        solution.n_evaluations,
    )
    return Trajectory(
        times=times,
        states=states,
        observables=observables,
        solution=solution if dense_output else None,
    )


def initial_state(amplitudes: Sequence[complex] | None, n_atoms: int) -> AtomicDensityMatrix:
    """Pure single-excitation state from atomic amplitudes, or all-ground if ``None``."""
    if amplitudes is None:
        psi = np.zeros(2**n_atoms, dtype=complex)
        psi[0] = 1.0
    else:
        c = np.asarray(amplitudes, dtype=complex)
        if c.size != n_atoms:
            raise ValueError(f"expected {n_atoms} amplitudes, got {c.size}")
        psi = single_excitation_vector(c / np.linalg.norm(c))
    return AtomicDensityMatrix.pure(psi)
