import numpy as np
import pytest

import rateindep as ri


@pytest.fixture
def unit_grid_15():
    return ri.Grid(1.0, 1.0, 15, 15)


def make_reference_problem(grid, n_steps, amplitude=2.5, gamma=0.05, accel=False):
    """Ramp-times-sine load on a double-well, the workhorse test setup."""
    return ri.Problem(
        grid=grid,
        m=1,
        energy=ri.double_well(gamma),
        dissipation=ri.euclidean(1.0),
        operator=ri.laplacian(1),
        loading=ri.analytic_loading(
            ri.time_ramp(1.0), ri.space_sine(amplitude), a=2.0, p=4.0
        ),
        initial=ri.Field.zeros(grid, 1),
        time=ri.TimePartition.uniform(1.0, n_steps),
    )


@pytest.fixture
def small_run(unit_grid_15):
    prob = make_reference_problem(unit_grid_15, 8)
    return prob, ri.run_evolution(prob, ri.SolverConfig(accel=True))
