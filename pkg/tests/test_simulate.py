import numpy as np
import pytest
from scipy import linalg

from speclink import chebyshev, operators, simulate
from speclink.errors import ConfigError, InputDataError, NonFiniteError
from speclink.schemas import BasisSpec, CoeffVector, GeneratorMatrix, InitialCondition, KoopmanMatrix

REFERENCE_DT = 5e-4
REFERENCE_T = 0.5


@pytest.fixture
def library():
    return operators.builtin_library()


class TestInitialConditions:
    def test_zero_amplitude(self, basis_8x8):
        a = simulate.make_ic(InitialCondition(kind="gaussian", amplitude=0.0), basis_8x8)
        assert not np.any(a.values)

    def test_wide_gaussian_is_low_mode(self, basis_8x8):
        a = simulate.make_ic(InitialCondition(kind="gaussian", width=2.0), basis_8x8)
        high = chebyshev.multi_indices(basis_8x8).max(axis=1) >= 4
        assert np.linalg.norm(a.values[high]) < 0.01 * np.linalg.norm(a.values)

    def test_off_center_gaussian(self, basis_8x8):
        ic = InitialCondition(kind="gaussian", center=(0.5, -0.25))
        a = simulate.make_ic(ic, basis_8x8)
        grid = chebyshev.node_grid(basis_8x8)
        peak = grid[np.argmax(chebyshev.inverse(a).values)]
        assert peak[0] > 0 and peak[1] < 0.25

    def test_center_dimension_mismatch(self, basis_8x8):
        with pytest.raises(ConfigError):
            simulate.make_ic(InitialCondition(kind="gaussian", center=(0.1,)), basis_8x8)

    def test_random_smooth_is_deterministic(self, basis_8x8):
        ic = InitialCondition(kind="random_smooth", seed=3)
        np.testing.assert_array_equal(simulate.make_ic(ic, basis_8x8).values, simulate.make_ic(ic, basis_8x8).values)

    def test_random_smooth_decays(self, basis_8x8):
        ic = InitialCondition(kind="random_smooth", seed=3, decay=0.5)
        a = simulate.make_ic(ic, basis_8x8).values
        rng = np.random.default_rng([3, 0])
        scale = 0.5 ** chebyshev.multi_indices(basis_8x8).sum(axis=1)
        np.testing.assert_array_equal(a, rng.standard_normal(64) * scale)

    def test_ensemble_members_differ(self, basis_4x4):
        members = simulate.ensemble(InitialCondition(kind="random_smooth", seed=7), 3)
        assert [m.member for m in members] == [0, 1, 2]
        vectors = [simulate.make_ic(m, basis_4x4).values for m in members]
        assert not np.allclose(vectors[0], vectors[1])

    def test_gaussian_ensemble_rejected(self):
        with pytest.raises(ConfigError):
            simulate.ensemble(InitialCondition(kind="gaussian"), 2)


class TestRungeKutta:
    def test_zero_generator(self, basis_4x4, random_coeffs):
        a = random_coeffs(basis_4x4)
        generator = GeneratorMatrix(basis=basis_4x4, entries=np.zeros((16, 16)))
        np.testing.assert_array_equal(simulate.rk4_step(generator, a, 0.1).values, a.values)

    def test_step_is_quartic_polynomial(self, basis_4x4, library, random_coeffs):
        generator = operators.assemble_generator(library[3], basis_4x4)
        a = random_coeffs(basis_4x4)
        dt = 0.01
        h = dt * generator.entries
        propagator = np.eye(16)
        term = np.eye(16)
        for j in range(1, 5):
            term = term @ h / j
            propagator = propagator + term
        np.testing.assert_allclose(simulate.rk4_step(generator, a, dt).values, propagator @ a.values, atol=1e-13)

    def test_local_error_is_fifth_order(self, basis_8x8, library, random_coeffs):
        generator = operators.assemble_generator(library[0], basis_8x8)
        a = random_coeffs(basis_8x8)
        errors = []
        for dt in (1e-3, 5e-4):
            exact = linalg.expm(dt * generator.entries) @ a.values
            errors.append(np.linalg.norm(simulate.rk4_step(generator, a, dt).values - exact))
        assert np.log2(errors[0] / errors[1]) >= 4.8

    def test_rejects_non_finite(self, basis_4x4):
        generator = GeneratorMatrix(basis=basis_4x4, entries=np.zeros((16, 16)))
        a = CoeffVector(basis=basis_4x4, values=np.full(16, np.inf))
        with pytest.raises(NonFiniteError):
            simulate.rk4_step(generator, a, 0.1)

    @pytest.mark.parametrize("name", operators.BUILTIN_NAMES)
    def test_global_convergence(self, basis_8x8, library, name):
        spec = operators.library_by_name(library, name)
        a0 = simulate.make_ic(InitialCondition(kind="random_smooth", seed=1), basis_8x8)
        generator = operators.assemble_generator(spec, basis_8x8)
        errors = []
        for dt in (4e-3, 2e-3, 1e-3):
            steps = simulate.step_count(dt, REFERENCE_T)
            rk4 = simulate.integrate(generator, a0, dt, steps, spec.name)
            exact = simulate.exact_propagate(operators.derive_koopman(spec, basis_8x8, dt), a0, steps)
            errors.append(np.linalg.norm(rk4.snapshots[-1] - exact.snapshots[-1]))
        assert np.log2(errors[0] / errors[1]) >= 3.8
        assert np.log2(errors[1] / errors[2]) >= 3.8


class TestSimulate:
    def test_step_count(self):
        assert simulate.step_count(REFERENCE_DT, REFERENCE_T) == 1000
        assert simulate.step_count(0.1, 0.3) == 3
        with pytest.raises(ConfigError):
            simulate.step_count(0.1, 0.05)

    def test_single_step_horizon(self, basis_4x4, library):
        trajectory = simulate.simulate(library[0], InitialCondition(), basis_4x4, REFERENCE_DT, REFERENCE_DT)
        assert trajectory.n_snapshots == 2

    @pytest.mark.parametrize("name", operators.BUILTIN_NAMES)
    def test_reference_defaults(self, basis_8x8, library, name):
        spec = operators.library_by_name(library, name)
        ic = InitialCondition()
        trajectory = simulate.simulate(spec, ic, basis_8x8, REFERENCE_DT, REFERENCE_T)
        assert trajectory.n_snapshots == 1001
        assert trajectory.pde_name == name
        np.testing.assert_array_equal(trajectory.snapshots[0], simulate.make_ic(ic, basis_8x8).values)
        assert np.all(np.isfinite(trajectory.snapshots))

    def test_zero_initial_condition_stays_zero(self, basis_4x4, library):
        trajectory = simulate.simulate(library[3], InitialCondition(amplitude=0.0), basis_4x4, 0.01, 0.1)
        assert not np.any(trajectory.snapshots)

    def test_deterministic(self, basis_8x8, library):
        ic = InitialCondition(kind="random_smooth", seed=11)
        first = simulate.simulate(library[3], ic, basis_8x8, REFERENCE_DT, 0.05)
        second = simulate.simulate(library[3], ic, basis_8x8, REFERENCE_DT, 0.05)
        np.testing.assert_array_equal(first.snapshots, second.snapshots)

    def test_matches_exact_propagation(self, basis_8x8, library):
        spec = library[0]
        ic = InitialCondition()
        trajectory = simulate.simulate(spec, ic, basis_8x8, REFERENCE_DT, REFERENCE_T)
        exact = simulate.exact_propagate(
            operators.derive_koopman(spec, basis_8x8, REFERENCE_DT), simulate.make_ic(ic, basis_8x8), 1000
        )
        assert np.max(np.abs(trajectory.snapshots - exact.snapshots)) < 1e-7

    def test_simulate_many(self, basis_4x4, library):
        ics = simulate.ensemble(InitialCondition(kind="random_smooth", seed=2), 4)
        trajectories = simulate.simulate_many(library[1], ics, basis_4x4, 0.01, 0.05)
        assert len(trajectories) == 4
        assert all(t.n_snapshots == 6 for t in trajectories)


class TestExactPropagate:
    def test_identity_single_step(self, basis_4x4, random_coeffs):
        a0 = random_coeffs(basis_4x4)
        identity = KoopmanMatrix(basis=basis_4x4, dt=0.1, entries=np.eye(16), provenance="equation_driven")
        trajectory = simulate.exact_propagate(identity, a0, 1)
        np.testing.assert_array_equal(trajectory.snapshots, [a0.values, a0.values])
        assert trajectory.pde_name == "exact"

    def test_rotation_preserves_norm(self):
        basis = BasisSpec(dims=1, sizes=(2,))
        angle = 0.3
        rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        koopman = KoopmanMatrix(basis=basis, dt=0.1, entries=rotation, provenance="equation_driven", label="rot")
        trajectory = simulate.exact_propagate(koopman, CoeffVector(basis=basis, values=[1.0, 2.0]), 50)
        np.testing.assert_allclose(np.linalg.norm(trajectory.snapshots, axis=1), np.sqrt(5.0), rtol=1e-12)
        assert trajectory.pde_name == "rot"

    def test_rejects_zero_steps(self, basis_4x4, random_coeffs):
        identity = KoopmanMatrix(basis=basis_4x4, dt=0.1, entries=np.eye(16), provenance="equation_driven")
        with pytest.raises(InputDataError):
            simulate.exact_propagate(identity, random_coeffs(basis_4x4), 0)
