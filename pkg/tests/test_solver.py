import numpy as np
import pytest

from fvrom.errors import ConfigError, SolverError
from fvrom.fields import BoundaryCondition
from fvrom.mesh import generate_cavity_mesh
from fvrom.solver import TransientCase, run_parameter_sweep, solve_transient

from conftest import cavity_pressure_bcs, cavity_velocity_bcs


def cavity_case(n=16, side=0.1, nu=1e-3, dt=2e-3, end=0.05, lid=(1.0, 0.0), **kw):
    mesh = generate_cavity_mesh(n, side)
    return TransientCase(
        mesh=mesh,
        nu=nu,
        dt=dt,
        end_time=end,
        u_bcs=cavity_velocity_bcs(lid),
        p_bcs=cavity_pressure_bcs(),
        **kw,
    )


class TestBasics:
    def test_zero_initial_zero_walls_stays_zero(self):
        case = cavity_case(n=8, lid=(0.0, 0.0), end=0.02)
        res = solve_transient(case)
        assert np.all(res.velocity.data == 0.0)
        assert np.all(res.pressure.data == 0.0)
        assert np.all(res.flux.data == 0.0)

    def test_paper_reynolds_number(self):
        # the full cavity setup: Re = U L / nu = 1 * 0.1 / 1e-4 = 1000
        case = cavity_case(n=8, nu=1e-4, end=0.004)
        reynolds = 1.0 * 0.1 / case.nu
        assert reynolds == pytest.approx(1000.0)

    def test_spinup_energy_monotone_and_bounded(self):
        # lid-driven spin-up from rest: kinetic energy grows monotonically
        # and stays below the lid bound 0.5 |Omega| U^2
        case = cavity_case(n=64, nu=1e-4, dt=5e-4, end=0.1, snapshot_interval=5e-3)
        res = solve_transient(case)
        mesh = case.mesh
        energy = [
            0.5 * np.sum(mesh.cell_volume * (res.velocity.record(i)[2] ** 2).sum(1))
            for i in range(len(res.velocity))
        ]
        assert energy[0] > 0.0
        assert all(b >= a for a, b in zip(energy, energy[1:]))
        assert max(energy) <= 0.5 * mesh.cell_volume.sum() * 1.0**2

    def test_continuity_of_recorded_fluxes(self):
        from fvrom.matrices import _scatter_matrix

        case = cavity_case(n=16, end=0.03, dt=1e-3, snapshot_interval=5e-3)
        res = solve_transient(case)
        scatter = _scatter_matrix(case.mesh)
        for i in range(len(res.flux)):
            phi = res.flux.data[i]
            defect = np.abs(scatter @ phi).max()
            assert defect <= case.continuity_tol * np.abs(phi).max()

    def test_determinism(self):
        case = cavity_case(n=12, end=0.02)
        a = solve_transient(case)
        b = solve_transient(case)
        assert np.array_equal(a.velocity.data, b.velocity.data)
        assert np.array_equal(a.pressure.data, b.pressure.data)
        assert np.array_equal(a.flux.data, b.flux.data)

    def test_bdf2_runs_and_differs_from_euler(self):
        case_e = cavity_case(n=12, end=0.02, time_scheme="euler")
        case_b = cavity_case(n=12, end=0.02, time_scheme="bdf2")
        res_e = solve_transient(case_e)
        res_b = solve_transient(case_b)
        assert not np.allclose(res_e.velocity.data, res_b.velocity.data)

    def test_cfl_warning(self):
        case = cavity_case(n=16, dt=2e-2, end=0.08, snapshot_interval=2e-2)
        with pytest.warns(UserWarning, match="CFL"):
            solve_transient(case)

    def test_nan_initial_condition_aborts(self):
        case = cavity_case(n=8, end=0.01)
        bad = np.zeros((case.mesh.n_cells, 2))
        bad[0, 0] = np.nan
        case = TransientCase(
            mesh=case.mesh, nu=case.nu, dt=case.dt, end_time=case.end_time,
            u_bcs=case.u_bcs, p_bcs=case.p_bcs, initial_u=bad,
        )
        with pytest.raises(SolverError, match="initial velocity"):
            solve_transient(case)


class TestValidation:
    def test_interval_must_be_multiple_of_dt(self):
        with pytest.raises(ConfigError, match="snapshot_interval"):
            cavity_case(snapshot_interval=3.3e-3)

    def test_positive_dt(self):
        with pytest.raises(ConfigError):
            cavity_case(dt=-1e-3)

    def test_positive_viscosity(self):
        with pytest.raises(ConfigError):
            cavity_case(nu=0.0)


class TestParameterSweep:
    def test_single_viscosity_matches_solve_transient(self):
        case = cavity_case(n=8, end=0.02)
        single = solve_transient(case, parameter=case.nu)
        sweep = run_parameter_sweep(case, [case.nu])
        assert np.array_equal(single.velocity.data, sweep.velocity.data)
        assert np.array_equal(single.pressure.data, sweep.pressure.data)

    def test_paper_viscosity_list_gives_five_blocks(self):
        nus = [0.005, 0.00625, 0.0075, 0.00875, 0.01]
        case = cavity_case(n=6, dt=2e-3, end=0.01, snapshot_interval=2e-3)
        sweep = run_parameter_sweep(case, nus)
        assert sweep.velocity.n_params == 5
        assert list(sweep.velocity.param_values) == nus

    def test_record_count_is_params_times_times(self):
        case = cavity_case(n=6, dt=2e-3, end=0.006, snapshot_interval=2e-3)
        sweep = run_parameter_sweep(case, [1e-3, 2e-3])
        assert len(sweep.velocity) == 2 * 3

    def test_empty_list_rejected(self):
        case = cavity_case(n=6, end=0.01)
        with pytest.raises(ConfigError):
            run_parameter_sweep(case, [])


class TestGridConvergence:
    def test_richardson_order_on_centreline(self):
        # Re = 10 cavity reaches a steady state quickly; compare the
        # centreline u-velocity on three nested grids at matched CFL.
        # Sampling uses linear interpolation between cell centres, so the
        # observed order reflects the spatial scheme.
        side, nu, t_end = 0.1, 1e-2, 0.15
        sample_y = np.linspace(0.015, 0.085, 9)
        profiles = []
        for n in (32, 64, 128):
            dt = 0.5 * (side / n) / 1.0
            dt = t_end / round(t_end / dt)
            case = TransientCase(
                mesh=generate_cavity_mesh(n, side),
                nu=nu,
                dt=dt,
                end_time=t_end,
                u_bcs=cavity_velocity_bcs(),
                p_bcs=cavity_pressure_bcs(),
                snapshot_interval=t_end,
            )
            res = solve_transient(case)
            u = res.velocity.record(len(res.velocity) - 1)[2][:, 0].reshape(n, n)
            # average the two columns adjacent to the centreline
            col = 0.5 * (u[:, n // 2 - 1] + u[:, n // 2])
            y = (np.arange(n) + 0.5) * side / n
            profiles.append(np.interp(sample_y, y, col))
        e1 = np.linalg.norm(profiles[1] - profiles[0])
        e2 = np.linalg.norm(profiles[2] - profiles[1])
        order = np.log2(e1 / e2)
        assert order >= 1.5
