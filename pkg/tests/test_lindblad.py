"""Tests for the coupling kernel, master-equation generator and trajectories."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from src.core.errors import KernelValidityError
from src.core.lindblad import (
    DriveSpec,
    Trajectory,
    concurrence,
    coupling_matrix,
    dark_state_fidelity_limit,
    dark_subspace,
    evolve,
    initial_state,
    lindblad_generator,
    lowering_operators,
    phase_sum,
    t1_to_local_decay,
    vec,
)
from src.core.model import GiantAtomSpec
from src.core.spectral import AtomicDensityMatrix, product_state
from src.experiments.configurations import NamedConfiguration

C = 0.5**2 / 2.0


class TestCouplingKernel:
    """Test suite for the collective coupling kernel."""

    def test_phase_sum(self) -> None:
        """Quarter-wave phases are exact."""
        assert phase_sum((0, 8), (0, 8)) == 4.0
        assert phase_sum((0, 8), (2, 10)) == -4.0
        assert phase_sum((0,), (1,)) == 1j

    def test_single_leg_atom(self) -> None:
        """A one-leg atom decays at the golden-rule rate g**2/(2 xi)."""
        kernel = coupling_matrix([GiantAtomSpec(legs=(5,), g=0.1)], xi=1.0)
        assert kernel.matrix[0, 0] == pytest.approx(0.005)
        assert kernel.exchange[0, 0] == 0.0

    def test_braided_kernel(self, braided: NamedConfiguration) -> None:
        """Braided legs give gamma = 4C [[1, -1], [-1, 1]] and no exchange."""
        kernel = coupling_matrix(braided.spec.atoms)
        assert np.allclose(kernel.gamma, 4 * C * np.array([[1.0, -1.0], [-1.0, 1.0]]))
        assert np.allclose(kernel.exchange, 0.0)
        assert kernel.decay_rates() == pytest.approx([0.0, 8 * C])

    @pytest.mark.parametrize("name", ["braided", "separate", "nested"])
    def test_symmetric_state_is_dark(self, name: str, request: pytest.FixtureRequest) -> None:
        """gamma annihilates (1, 1) exactly for every two-atom configuration."""
        kernel = coupling_matrix(request.getfixturevalue(name).spec.atoms)
        assert np.all(kernel.gamma @ np.ones(2) == 0.0)
        assert kernel.decay_rates()[0] >= -1e-12

    def test_three_atom_kernel(self, braided3: NamedConfiguration) -> None:
        """Three braided atoms have a rank-one decay matrix along (1, -1, -1)."""
        kernel = coupling_matrix(braided3.spec.atoms)
        v = np.array([1.0, -1.0, -1.0])
        assert np.allclose(kernel.gamma, 4 * C * np.outer(v, v))
        assert dark_subspace(kernel).shape == (3, 2)

    def test_prefactor_scale(self) -> None:
        """The prefactor scale multiplies the whole kernel."""
        atoms = [GiantAtomSpec(legs=(0, 8), g=0.2)]
        base = coupling_matrix(atoms).matrix
        assert np.allclose(coupling_matrix(atoms, prefactor_scale=2.0).matrix, 2.0 * base)

    def test_detuned_atom_rejected(self) -> None:
        """The kernel is only valid at band centre."""
        with pytest.raises(KernelValidityError):
            coupling_matrix([GiantAtomSpec(omega=0.3, legs=(0,))], omega_c=0.0)

    def test_dark_subspace_braided(self, braided: NamedConfiguration) -> None:
        """The braided dark subspace is spanned by the Bell amplitudes."""
        basis = dark_subspace(coupling_matrix(braided.spec.atoms))
        assert basis.shape == (2, 1)
        assert np.allclose(np.abs(basis[:, 0]), 1.0 / np.sqrt(2.0))

    def test_dark_limits(
        self, braided: NamedConfiguration, braided3: NamedConfiguration
    ) -> None:
        """|eg> keeps 1/sqrt(2) Bell fidelity, |W> keeps 8/9 of itself."""
        two = coupling_matrix(braided.spec.atoms)
        assert dark_state_fidelity_limit(two, [1.0, 0.0], [1.0, 1.0]) == pytest.approx(
            1.0 / np.sqrt(2.0)
        )
        three = coupling_matrix(braided3.spec.atoms)
        assert dark_state_fidelity_limit(three, [1.0, 1.0, 1.0]) == pytest.approx(8.0 / 9.0)

    def test_local_decay_conversion(self) -> None:
        """T1 converts to a rate in units of xi."""
        assert t1_to_local_decay(100.0) == pytest.approx(0.01)
        with pytest.raises(ValueError):
            t1_to_local_decay(0.0)


class TestGenerator:
    """Test suite for the superoperator construction."""

    def test_lowering_operator(self) -> None:
        """sigma_0^- takes |eg> to |gg>."""
        s0 = lowering_operators(2)[0]
        assert np.allclose(s0 @ product_state("eg"), product_state("gg"))
        assert np.allclose(s0 @ product_state("ge"), 0.0)

    def test_trace_preserving(self, braided: NamedConfiguration) -> None:
        """Both generator pieces annihilate the trace functional."""
        kernel = coupling_matrix(braided.spec.atoms)
        generator = lindblad_generator(
            kernel, DriveSpec(eta=0.05, t0=10.0), local_decay=0.01
        )
        trace_row = vec(np.eye(4)).conj()
        assert np.allclose(trace_row @ generator.free, 0.0)
        assert np.allclose(trace_row @ generator.driven, 0.0)

    def test_switch_points(self, braided: NamedConfiguration) -> None:
        """A released drive gives two pieces, no drive one."""
        kernel = coupling_matrix(braided.spec.atoms)
        released = lindblad_generator(kernel, DriveSpec(eta=0.01, t0=5.0))
        assert [t for t, _ in released.switch_points()] == [5.0, math.inf]
        assert released.at(1.0) is released.driven
        assert released.at(6.0) is released.free
        assert len(lindblad_generator(kernel).switch_points()) == 1

    def test_drive_target_checked(self, braided: NamedConfiguration) -> None:
        """The driven atom must exist."""
        kernel = coupling_matrix(braided.spec.atoms)
        with pytest.raises(ValueError):
            lindblad_generator(kernel, DriveSpec(target_atom=2, eta=0.01))

    def test_negative_local_decay(self, braided: NamedConfiguration) -> None:
        """Local decay rates are non-negative."""
        with pytest.raises(ValueError):
            lindblad_generator(coupling_matrix(braided.spec.atoms), local_decay=-1.0)


class TestEvolution:
    """Test suite for master-equation trajectories."""

    def test_bell_state_is_stationary(
        self, braided: NamedConfiguration, bell: np.ndarray
    ) -> None:
        """The dark Bell state does not decay."""
        generator = lindblad_generator(coupling_matrix(braided.spec.atoms))
        times = np.linspace(0.0, 1000.0, 101)
        trajectory = evolve(initial_state([1.0, 1.0], 2), generator, times, {"bell": bell})
        assert np.min(trajectory.observables["fidelity_bell"]) >= 1.0 - 1e-6
        assert np.allclose(trajectory.observables["trace"], 1.0, atol=1e-9)

    def test_product_state_relaxes_to_dark_projection(
        self, braided: NamedConfiguration, bell: np.ndarray
    ) -> None:
        """|eg> loses its bright half: F_Bell -> 1/sqrt(2)."""
        generator = lindblad_generator(coupling_matrix(braided.spec.atoms))
        trajectory = evolve(
            initial_state([1.0, 0.0], 2), generator, [0.0, 15.0, 30.0], {"bell": bell}
        )
        assert trajectory.observables["fidelity_bell"][-1] == pytest.approx(
            1.0 / np.sqrt(2.0), abs=1e-6
        )
        assert trajectory.observables["ground_population"][-1] == pytest.approx(0.5, abs=1e-6)

    def test_bright_state_superradiant(self, braided: NamedConfiguration) -> None:
        """The antisymmetric state decays at 2 * 8C."""
        generator = lindblad_generator(coupling_matrix(braided.spec.atoms))
        trajectory = evolve(initial_state([1.0, -1.0], 2), generator, [0.0, 1.0])
        assert trajectory.observables["excitation_number"][-1] == pytest.approx(
            math.exp(-16 * C), rel=1e-6
        )

    def test_single_atom_decay_with_local_loss(self) -> None:
        """Population decays at g**2/xi plus the local rate."""
        kernel = coupling_matrix([GiantAtomSpec(legs=(0,), g=0.1)])
        generator = lindblad_generator(kernel, local_decay=0.02)
        trajectory = evolve(initial_state([1.0], 1), generator, [0.0, 10.0])
        assert trajectory.observables["population_0"][-1] == pytest.approx(
            math.exp(-(0.01 + 0.02) * 10.0), rel=1e-6
        )

    def test_forced_w_state(self, braided3: NamedConfiguration, w: np.ndarray) -> None:
        """An undriven |W> settles at 8/9 fidelity."""
        generator = lindblad_generator(coupling_matrix(braided3.spec.atoms))
        trajectory = evolve(initial_state([1.0, 1.0, 1.0], 3), generator, [0.0, 20.0], {"w": w})
        assert trajectory.observables["fidelity_w"][-1] == pytest.approx(8.0 / 9.0, abs=1e-3)

    def test_drive_excites_ground_state(self, braided: NamedConfiguration) -> None:
        """A drive pumps excitation into the atoms and stops at release."""
        generator = lindblad_generator(
            coupling_matrix(braided.spec.atoms), DriveSpec(eta=0.05, t0=20.0)
        )
        times = np.arange(0.0, 41.0, 1.0)
        trajectory = evolve(initial_state(None, 2), generator, times)
        excitation = trajectory.observables["excitation_number"]
        assert excitation[0] == 0.0
        assert excitation[20] > 0.01
        assert "concurrence" in trajectory.observables

    @pytest.mark.parametrize(("name", "n_atoms"), [("braided", 2), ("braided3", 3)])
    def test_excitation_never_grows_without_drive(
        self, name: str, n_atoms: int, request: pytest.FixtureRequest
    ) -> None:
        """Free evolution from the fully excited state only loses excitations."""
        config = request.getfixturevalue(name)
        generator = lindblad_generator(coupling_matrix(config.spec.atoms))
        psi = np.zeros(2**n_atoms, dtype=complex)
        psi[-1] = 1.0
        times = np.linspace(0.0, 20.0, 201)
        trajectory = evolve(AtomicDensityMatrix.pure(psi), generator, times)
        excitation = trajectory.observables["excitation_number"]
        assert excitation[0] == pytest.approx(float(n_atoms))
        assert np.all(np.diff(excitation) <= 1e-12)
        assert excitation[-1] < excitation[0]

    def test_long_driven_run_stays_physical(self, braided: NamedConfiguration) -> None:
        """Thousands of driven time units keep every state a valid density matrix."""
        generator = lindblad_generator(
            coupling_matrix(braided.spec.atoms), DriveSpec(eta=0.01)
        )
        times = np.arange(0.0, 2001.0, 1.0)
        trajectory = evolve(initial_state(None, 2), generator, times)
        for state in trajectory.states[::100]:
            values = np.linalg.eigvalsh(state.matrix)
            assert values[0] >= -1e-10
        assert np.allclose(trajectory.observables["trace"], 1.0, atol=1e-10)

    def test_adaptive_method_still_available(self, braided: NamedConfiguration) -> None:
        """A solve_ivp method name switches to adaptive integration."""
        generator = lindblad_generator(coupling_matrix(braided.spec.atoms))
        times = [0.0, 1.0, 2.0]
        exact = evolve(initial_state([1.0, -1.0], 2), generator, times)
        adaptive = evolve(initial_state([1.0, -1.0], 2), generator, times, method="DOP853")
        assert np.allclose(
            exact.observables["excitation_number"],
            adaptive.observables["excitation_number"],
            atol=1e-8,
        )

    def test_dense_output_interpolates(self, braided: NamedConfiguration) -> None:
        """Interpolated states agree with grid states."""
        generator = lindblad_generator(coupling_matrix(braided.spec.atoms))
        times = np.linspace(0.0, 2.0, 5)
        trajectory = evolve(initial_state([1.0, 0.0], 2), generator, times, dense_output=True)
        assert np.allclose(trajectory.state_at(1.0).matrix, trajectory.states[2].matrix, atol=1e-6)

    def test_state_at_needs_dense_output(self, braided: NamedConfiguration) -> None:
        """Without dense output there is nothing to interpolate."""
        generator = lindblad_generator(coupling_matrix(braided.spec.atoms))
        trajectory = evolve(initial_state([1.0, 0.0], 2), generator, [0.0, 1.0])
        with pytest.raises(RuntimeError):
            trajectory.state_at(0.5)

    def test_atom_count_mismatch(self, braided: NamedConfiguration) -> None:
        """Initial state and generator must describe the same atoms."""
        generator = lindblad_generator(coupling_matrix(braided.spec.atoms))
        with pytest.raises(ValueError):
            evolve(initial_state([1.0], 1), generator, [0.0, 1.0])

    def test_serialization(self, braided: NamedConfiguration) -> None:
        """Trajectories export to frames and JSON."""
        generator = lindblad_generator(coupling_matrix(braided.spec.atoms))
        trajectory = evolve(initial_state([1.0, 0.0], 2), generator, [0.0, 1.0])
        frame = trajectory.to_frame()
        assert list(frame["t"]) == [0.0, 1.0]
        assert "population_1" in frame
        payload = json.loads(trajectory.to_json(snapshots=True))
        assert len(payload["states"]) == 2


class TestObservables:
    """Test suite for state observables."""

    def test_concurrence(self, bell: np.ndarray) -> None:
        """Bell states are maximally entangled, product states not at all."""
        assert concurrence(AtomicDensityMatrix.pure(bell)) == pytest.approx(1.0)
        assert concurrence(AtomicDensityMatrix.pure(product_state("eg"))) == pytest.approx(0.0)
        with pytest.raises(ValueError):
            concurrence(np.eye(8) / 8)

    def test_initial_state(self) -> None:
        """None is the ground state, amplitudes are normalized."""
        ground = initial_state(None, 2)
        assert ground.matrix[0, 0] == 1.0
        excited = initial_state([3.0, 4.0], 2)
        assert excited.trace == pytest.approx(1.0)
        assert excited.excited_population(0) == pytest.approx(0.36)
        with pytest.raises(ValueError):
            initial_state([1.0], 2)

    def test_trajectory_times_increasing(self) -> None:
        """Trajectories need strictly increasing times."""
        state = initial_state(None, 1)
        with pytest.raises(ValueError):
            Trajectory(times=np.array([1.0, 0.0]), states=[state, state])
