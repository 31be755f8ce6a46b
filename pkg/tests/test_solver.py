import dataclasses

import numpy as np
import pytest

from radvisc.errors import ConfigError, DataError, SolverError
from radvisc.model import GasLaw, RadialGrid, discrete_mass
from radvisc.scheduler import schedule
from radvisc.solver import (
    SolverConfig,
    boundary_traces,
    constant_state,
    dissipation_rates,
    mass_budget,
    one_sided_derivative_at_a,
    prepare_initial_data,
    run,
    stable_dt,
    step,
    with_T,
)

from conftest import bump_run


def setup(eps=0.1, gamma=2.0, h=4e-3):
    params = schedule(eps, 3, gamma)
    law = GasLaw(gamma, params.delta)
    grid = RadialGrid.build(params.a, params.b, h, 3)
    return params, law, grid


def bump_init(params, law, grid, amp=1.0):
    return prepare_initial_data(
        lambda r: params.rho_bar + amp * np.exp(-np.asarray(r) ** 2), lambda r: np.zeros(np.shape(r)), params, grid, law
    )


def test_config_validation():
    for kwargs in (dict(cfl=0.0), dict(cfl=1.5), dict(T_final=-1.0), dict(scheme="weno"), dict(fixed_dt=0.0)):
        with pytest.raises(ConfigError):
            SolverConfig(**kwargs)


def test_constant_state_single_step_is_fixed_point():
    params, law, grid = setup()
    s0 = constant_state(params, grid).state()
    s1, info = step(s0, SolverConfig(), params, law, grid)
    assert np.max(np.abs(s1.rho - s0.rho)) <= 1e-12
    assert np.max(np.abs(s1.m)) <= 1e-12
    assert info.dt > 0


def test_constant_state_over_unit_time():
    params, law, grid = setup(1e-2)
    traj = run(constant_state(params, grid), SolverConfig(T_final=1.0, n_snapshots=11), params, law, grid)
    assert np.max(np.abs(traj.rho - params.rho_bar)) <= 1e-10
    assert np.max(np.abs(traj.m)) <= 1e-10


def test_prepare_constant_profiles_unchanged():
    params, law, grid = setup()
    init = prepare_initial_data(
        lambda r: np.full(np.shape(r), params.rho_bar), lambda r: np.zeros(np.shape(r)), params, grid, law
    )
    assert np.array_equal(init.rho, np.full(grid.size, params.rho_bar))
    assert np.array_equal(init.m, np.zeros(grid.size))
    assert init.energy == 0.0


@pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
def test_prepare_bump_compatibility(eps):
    params, law, grid = setup(eps)
    init = bump_init(params, law, grid)
    assert abs(one_sided_derivative_at_a(init.rho, grid)) <= 1e-10
    assert init.m[0] == 0.0 and init.m[-1] == 0.0
    assert init.rho[-1] == params.rho_bar
    assert init.c_eps >= params.rho_bar
    w = grid.nodes ** 2
    # (r^{n-1} m)_r vanishes at a on the one-sided stencil
    assert abs(one_sided_derivative_at_a(w * init.m, grid)) <= 1e-10


def test_prepare_enforces_outer_dirichlet_momentum():
    params, law, grid = setup()
    init = prepare_initial_data(
        lambda r: np.full(np.shape(r), params.rho_bar), lambda r: np.ones(np.shape(r)), params, grid, law
    )
    assert init.m[-1] == 0.0
    assert init.m[0] == 0.0


def test_prepare_errors():
    params, law, grid = setup()
    zero = lambda r: np.zeros(np.shape(r))  # noqa: E731
    with pytest.raises(ConfigError):
        prepare_initial_data(lambda r: np.ones(np.shape(r)), zero, params, grid, law, mollification_width=grid.b)
    with pytest.raises(DataError):
        prepare_initial_data(lambda r: -np.ones(np.shape(r)), zero, params, grid, law)
    with pytest.raises(DataError):
        prepare_initial_data(lambda r: np.full(np.shape(r), np.inf), zero, params, grid, law)


def test_single_step_mass_telescopes():
    params, law, grid = setup()
    s0 = bump_init(params, law, grid).state()
    s1, info = step(s0, SolverConfig(), params, law, grid)
    V = grid.volumes[:-1]
    change = V @ s1.rho[:-1] - V @ s0.rho[:-1]
    assert abs(change + info.boundary_mass_flux) <= 1e-10


def test_mass_budget_over_run(small_bump):
    assert abs(mass_budget(small_bump)) <= 1e-10


def test_zero_final_time_keeps_initial_state():
    params, law, grid = setup()
    init = bump_init(params, law, grid)
    traj = run(init, SolverConfig(T_final=0.0), params, law, grid)
    assert traj.times.tolist() == [0.0]
    assert np.array_equal(traj.rho[0], init.rho)


def test_time_order_at_least_one():
    params, law, grid = setup(0.1, h=1e-2)
    init = bump_init(params, law, grid)
    base = stable_dt(init.state(), SolverConfig(), params, law, grid)
    finals = []
    for k in range(4):
        cfg = SolverConfig(T_final=0.04, n_snapshots=2, fixed_dt=base / 2**k)
        finals.append(run(init, cfg, params, law, grid).rho[-1])
    d = [np.max(np.abs(finals[k] - finals[k + 1])) for k in range(3)]
    order = np.log2(d[1] / d[2])
    assert order >= 0.9


def test_floor_breach_raises_with_partial_trajectory():
    params, law, grid = setup()
    init = bump_init(params, law, grid)
    cfg = SolverConfig(density_floor=2.0 * params.rho_bar)
    with pytest.raises(SolverError) as info:
        run(init, cfg, params, law, grid)
    err = info.value
    assert err.t is not None and err.location is not None
    assert err.trajectory is not None and err.trajectory.status == "failed"


def test_runs_are_bit_identical(small_bump):
    again = bump_run(0.1)
    assert np.array_equal(small_bump.rho, again.rho)
    assert np.array_equal(small_bump.m, again.m)
    assert np.array_equal(small_bump.dissipation, again.dissipation)


def test_energy_at_every_snapshot_bounded():
    traj = bump_run(1e-2)
    assert np.all(traj.energy <= traj.E0 * (1.0 + 1e-6))
    total = traj.energy + traj.dissipation.sum(axis=1)
    assert np.max(total) <= traj.E0 * (1.0 + 1e-4)


def test_boundary_traces(small_bump):
    bt = boundary_traces(small_bump)
    for key in ("rho_r_a", "m_a", "rho_b", "m_b"):
        assert np.max(np.abs(bt[key])) <= 1e-8


def test_snapshots_land_on_schedule(small_bump):
    assert np.array_equal(small_bump.times, SolverConfig().times())
    assert small_bump.T == 0.5
    assert np.all(small_bump.rho > 0.0)


def test_second_order_scheme_close_to_first():
    t1 = bump_run(0.1)
    t2 = bump_run(0.1, scheme="llf2")
    assert np.max(np.abs(t1.rho[-1] - t2.rho[-1])) < 0.05 * np.max(t1.rho[-1])
    assert np.max(t2.energy + t2.dissipation.sum(axis=1)) <= t2.E0 * (1 + 1e-4)


def test_dissipation_rates_vanish_for_constant_state():
    params, law, grid = setup()
    rates = dissipation_rates(np.full(grid.size, 0.3), np.zeros(grid.size), grid, law)
    assert np.all(np.abs(rates) <= 1e-25)


def test_mass_decreases_only_through_outer_boundary(small_bump):
    m = small_bump.mass()
    assert np.all(np.isfinite(m))
    assert m[0] == pytest.approx(discrete_mass(small_bump.snapshots[0], small_bump.grid))


def test_with_T_resets_schedule():
    cfg = with_T(dataclasses.replace(SolverConfig(), snapshot_times=(0.0, 0.1)), 1.0)
    assert cfg.T_final == 1.0 and cfg.snapshot_times is None
