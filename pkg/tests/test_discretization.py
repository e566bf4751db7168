import math

import numpy as np
import pytest

from floatlab import discretization as dz
from floatlab.errors import CompatibilityViolation, InvalidGeometry
from floatlab.spectral import PhysicalParams, coupling_matrix

P11 = PhysicalParams(1.0, 1.0)


class TestGrid:
    def test_node_placement_example(self):
        grid = dz.build_grid(P11, 8.0, 8)
        assert grid.spacing == pytest.approx(1.0)
        assert grid.x_left == pytest.approx([-8, -7, -6, -5, -4, -3, -2, -1])
        assert grid.x_right == pytest.approx([1, 2, 3, 4, 5, 6, 7, 8])

    def test_sponge_profile(self):
        grid = dz.build_grid(P11, 5.0, 9, sponge_width=2.0, sponge_strength=2.0)
        assert grid.sponge(np.array([5.0]))[0] == pytest.approx(2.0)
        assert grid.sponge(np.array([3.0]))[0] == 0.0
        assert grid.sponge(np.array([-4.0]))[0] == pytest.approx(0.5)

    def test_zero_width_sponge_vanishes(self):
        grid = dz.build_grid(P11, 5.0, 9, sponge_width=0.0, sponge_strength=3.0)
        assert np.all(grid.sponge(grid.x_right) == 0.0)

    def test_geometry_validation(self):
        with pytest.raises(InvalidGeometry):
            dz.build_grid(P11, 0.5, 10)
        with pytest.raises(InvalidGeometry):
            dz.build_grid(P11, 5.0, 4)
        with pytest.raises(InvalidGeometry):
            dz.build_grid(P11, 5.0, 10, sponge_width=4.5)

    def test_state_dimension(self):
        # h on every node, flux interiors, plus H and the two boundary
        # fluxes: the boundary and truncation nodes are not duplicated,
        # so the count is 4*n_side - 1
        grid = dz.build_grid(P11, 5.0, 12)
        assert grid.state_dim == 4 * 12 - 1
        assert dz.assemble(grid).A.shape == (47, 47)


class TestStateLayout:
    def test_flatten_unflatten_roundtrip(self):
        grid = dz.build_grid(P11, 5.0, 10)
        rng = np.random.default_rng(0)
        z = rng.standard_normal(grid.state_dim)
        again = dz.State.unflatten(z, grid).flatten(grid)
        assert again == pytest.approx(z)

    def test_boundary_nodes_are_the_scalar_states(self):
        grid = dz.build_grid(P11, 5.0, 10)
        rng = np.random.default_rng(1)
        st = dz.State.unflatten(rng.standard_normal(grid.state_dim), grid)
        assert st.q_left[-1] == st.q_minus
        assert st.q_right[0] == st.q_plus
        assert st.q_left[0] == 0.0 and st.q_right[-1] == 0.0


class TestAssemble:
    def test_input_column_closed_form(self):
        for a in (0.5, 1.0, 2.0):
            grid = dz.default_grid(PhysicalParams(a, 1.0), n_side=16)
            system = dz.assemble(grid)
            n = grid.n_side
            direct = a / (1.0 + 2.0 * a**3 / 3.0)
            assert abs(system.B[4 * n - 3] - direct) <= 1e-12
            assert abs(system.B[4 * n - 2] + direct) <= 1e-12
            m = coupling_matrix(grid.params)
            assert system.B[[4 * n - 3, 4 * n - 2]] == pytest.approx(
                2.0 * a * (m @ [1.0, -1.0]), abs=1e-14)

    def test_unit_half_width_input_values(self):
        grid = dz.default_grid(P11, n_side=16)
        system = dz.assemble(grid)
        assert system.B[4 * 16 - 3] == pytest.approx(0.6)
        assert system.B[4 * 16 - 2] == pytest.approx(-0.6)

    def test_rest_state_is_equilibrium(self):
        grid = dz.default_grid(P11, n_side=40)
        system = dz.assemble(grid)
        n = grid.n_side
        rest = dz.State(3.0, np.full(n, 3.0), np.full(n, 3.0), np.zeros(n), np.zeros(n))
        assert np.abs(system.A @ rest.flatten(grid)).max() <= 1e-12

    def test_spectrum_in_closed_left_half_plane_without_sponge(self):
        grid = dz.build_grid(P11, 20.0, 80)
        ev = np.linalg.eigvals(dz.assemble(grid).A)
        assert ev.real.max() <= 1e-8

    def test_feedback_row_is_minus_output_row(self):
        system = dz.assemble(dz.default_grid(P11, n_side=24))
        assert np.array_equal(system.F, -system.C)

    def test_output_row_reads_hdot(self):
        grid = dz.default_grid(P11, n_side=24)
        system = dz.assemble(grid)
        rng = np.random.default_rng(2)
        z = rng.standard_normal(grid.state_dim)
        st = dz.State.unflatten(z, grid)
        assert system.C @ z == pytest.approx(st.hdot(grid))
        assert system.C @ z == pytest.approx((system.A @ z)[0])


class TestInitialState:
    def test_rest_flux_accepted(self):
        grid = dz.default_grid(P11, n_side=16)
        st = dz.initial_state(grid, 0.0, 0.0, lambda x: 0.0, lambda x: 0.0)
        assert st.q_minus == 0.0 and st.q_plus == 0.0

    def test_linear_flux_fixes_the_solid_velocity(self):
        grid = dz.default_grid(P11, n_side=16)
        st = dz.initial_state(grid, 0.0, 1.0, lambda x: 0.0, lambda x: -x)
        assert st.q_minus == pytest.approx(1.0)
        assert st.q_plus == pytest.approx(-1.0)

    def test_mismatched_velocity_rejected(self):
        grid = dz.default_grid(P11, n_side=16)
        with pytest.raises(CompatibilityViolation):
            dz.initial_state(grid, 0.0, 0.0, lambda x: 0.0, lambda x: -x)

    def test_presets_are_compatible_by_construction(self):
        grid = dz.default_grid(P11, n_side=32)
        for name in dz.PRESETS:
            st = dz.preset_state(grid, name)
            assert isinstance(st, dz.State)

    def test_unknown_preset(self):
        grid = dz.default_grid(P11, n_side=16)
        with pytest.raises(ValueError):
            dz.preset_state(grid, "vortex")

    def test_heave_with_nonzero_velocity_rejected(self):
        grid = dz.default_grid(P11, n_side=16)
        with pytest.raises(CompatibilityViolation):
            dz.heave_state(grid, 1.0, G0=0.5)


class TestEnergy:
    def test_zero_state(self):
        grid = dz.default_grid(P11, n_side=16)
        assert dz.energy(dz.rest_state(grid), grid) == 0.0

    def test_heave_energy_is_exact(self):
        # only the interior height term contributes: (1/2) * 2a * H^2
        grid = dz.default_grid(P11, n_side=16)
        assert dz.energy(dz.heave_state(grid, 1.0), grid) == pytest.approx(1.0)

    def test_boundary_flux_example_converges_to_hand_value(self):
        # q- = 1, q+ = -1 gives Hdot = 1 and interior flux -x:
        # E -> 1/3 + 1/2 = 5/6; the exterior trapezoid adds h/2 per side
        values = {}
        for n in (100, 400):
            grid = dz.default_grid(P11, n_side=n)
            st = dz.rest_state(grid)
            st.q_left[-1] = 1.0
            st.q_right[0] = -1.0
            values[n] = dz.energy(st, grid)
            assert values[n] == pytest.approx(5.0 / 6.0 + grid.spacing / 2.0, abs=1e-12)
        assert abs(values[400] - 5.0 / 6.0) < abs(values[100] - 5.0 / 6.0)

    def test_quadratic_form_matches_direct_evaluation(self):
        grid = dz.default_grid(P11, n_side=24)
        w = dz.energy_matrix(grid)
        assert np.abs(w - w.T).max() == 0.0
        assert np.linalg.eigvalsh(w).min() >= 0.0
        rng = np.random.default_rng(3)
        for _ in range(5):
            z = rng.standard_normal(grid.state_dim)
            direct = dz.energy(dz.State.unflatten(z, grid), grid)
            assert 0.5 * z @ w @ z == pytest.approx(direct, rel=1e-12)


class TestPressureReconstruction:
    def apply_generator(self, system, state, u):
        grid = system.grid
        zdot = system.A @ state.flatten(grid) + system.B * u
        return dz.State.unflatten(zdot, grid)

    def test_zero_state_gives_zero_pressure(self):
        grid = dz.default_grid(P11, n_side=32)
        system = dz.assemble(grid)
        st = dz.rest_state(grid)
        profile, defects = dz.reconstruct_pressure(
            st, self.apply_generator(system, st, 0.0), 0.0, grid)
        assert (profile.c0, profile.c1, profile.c2) == (0.0, 0.0, 0.0)
        assert defects["right_jump"] == 0.0 and defects["newton"] == 0.0

    def test_steady_translation_gives_zero_pressure(self):
        grid = dz.default_grid(P11, n_side=32)
        system = dz.assemble(grid)
        n = grid.n_side
        st = dz.State(1.0, np.ones(n), np.ones(n), np.zeros(n), np.zeros(n))
        profile, defects = dz.reconstruct_pressure(
            st, self.apply_generator(system, st, 0.0), 0.0, grid)
        assert abs(profile.c0) <= 1e-12 and abs(profile.c1) <= 1e-12
        assert abs(profile.c2) <= 1e-12
        assert max(defects.values()) <= 1e-12

    def test_defects_at_machine_precision_for_any_state(self):
        # the reconstruction inverts exactly the algebra the boundary-flux
        # rows encode, so the jump and momentum defects sit at rounding
        # level for smooth and rough states alike (comfortably O(h^2))
        def smooth_state(grid):
            h0 = lambda x: 0.3 * math.exp(-((abs(x) - 4.0) / 2.0) ** 2)
            q0 = lambda x: 0.2 * math.exp(-((x - 3.0) / 1.5) ** 2)
            g0 = -(q0(grid.params.a) - q0(-grid.params.a)) / (2 * grid.params.a)
            return dz.initial_state(grid, 0.1, g0, h0, q0)

        rng = np.random.default_rng(7)
        for n in (100, 199):
            grid = dz.build_grid(P11, 20.0, n)
            system = dz.assemble(grid)
            for st in (smooth_state(grid),
                       dz.State.unflatten(rng.standard_normal(grid.state_dim), grid)):
                _, d = dz.reconstruct_pressure(
                    st, self.apply_generator(system, st, 0.3), 0.3, grid)
                assert max(d.values()) <= 1e-12

    def test_profile_integral(self):
        profile = dz.PressureProfile(c0=1.0, c1=5.0, c2=3.0)
        # odd term drops; 2a*c0 + (2 a^3/3) c2 with a = 2
        assert profile.integral(2.0) == pytest.approx(2 * 2 * 1.0 + 16 / 3 * 3.0)
        assert profile(2.0) == pytest.approx(3.0 * 4 + 5.0 * 2 + 1.0)
