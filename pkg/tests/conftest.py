import dataclasses

import numpy as np
import pytest

from radvisc.config import ProblemConfig, RunConfig
from radvisc.model import GasLaw, RadialGrid
from radvisc.pipeline import initial_profiles, level_setup, solver_config, sweep_report
from radvisc.solver import prepare_initial_data, run


def reference_config(gamma=2.0, **problem):
    return RunConfig(problem=ProblemConfig(gamma=float(gamma), **problem))


@pytest.fixture(scope="session")
def reference_sweeps():
    """Three-level bump sweeps for gamma = 2 and 3, trajectories kept."""
    return {g: sweep_report(reference_config(g), seed=0, keep_trajectory=True) for g in (2.0, 3.0)}


def bump_run(eps=0.1, gamma=2.0, **solver):
    cfg = reference_config(gamma)
    if solver:
        cfg = dataclasses.replace(cfg, solver=dataclasses.replace(cfg.solver, **solver))
    params, law, grid = level_setup(cfg, eps)
    rho0, m0 = initial_profiles(cfg, params.rho_bar)
    init = prepare_initial_data(rho0, m0, params, grid, law)
    return run(init, solver_config(cfg), params, law, grid)


@pytest.fixture(scope="session")
def small_bump():
    return bump_run(0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def law2():
    return GasLaw(2.0)


@pytest.fixture
def law3():
    return GasLaw(3.0)


@pytest.fixture
def unit_grid():
    return RadialGrid.build(0.1, 2.0, 0.02, 3)
