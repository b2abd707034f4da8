import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alpertlab.grid import (
    Cube, Grid, Lattice, Sampler, cubes_at_scale, default_sampler, grid_expectation,
    lattice_centers, nu_of_grid,
)


def test_cube_geometry():
    Q = Cube((0.5, 0.5), 1.0)
    assert Q.volume == 1.0
    kids = Q.children()
    assert len(kids) == 4
    assert math.isclose(sum(c.volume for c in kids), 1.0)
    assert Q.contains(np.array([[0.2, 0.9], [1.2, 0.5]])).tolist() == [True, False]


def test_cube_rejects_bad_side():
    with pytest.raises(ValueError):
        Cube((0.0,), -1.0)


def test_grid_shift_bounds():
    with pytest.raises(ValueError):
        Grid(1, (1.5,))
    with pytest.raises(ValueError):
        Grid(0)


def test_lattice_size():
    L = Lattice(3, 2)
    assert len(L) == 17**2
    assert L.points.shape == (289, 2)
    assert np.allclose(L.points.max(axis=0), 1.0)


@settings(max_examples=40, deadline=None)
@given(
    s=st.integers(0, 5),
    shift=st.floats(-1, 1, allow_nan=False),
    lo=st.floats(-1, 0.5, allow_nan=False),
    side=st.floats(0.05, 1.0, allow_nan=False),
)
def test_cubes_at_scale_cover_region(s, shift, lo, side):
    grid = Grid(1, (shift,))
    U = Cube.from_lower((lo,), side)
    cubes = cubes_at_scale(grid, s, U)
    assert all(Q.intersects(U) for Q in cubes)
    covered = sum(min(Q.upper[0], U.upper[0]) - max(Q.lower[0], U.lower[0]) for Q in cubes)
    assert math.isclose(covered, side, rel_tol=1e-9, abs_tol=1e-12)


@settings(max_examples=40, deadline=None)
@given(s=st.integers(0, 6), shift=st.floats(-1, 1, allow_nan=False))
def test_nu_in_fundamental_domain(s, shift):
    nu = nu_of_grid(Grid(1, (shift,)), s)
    assert 0.0 <= nu[0] < 2.0**-s


def test_lattice_centers_count_and_spacing():
    c = lattice_centers([0.01], 3)
    assert c.shape == (17, 1)
    assert np.allclose(np.diff(c[:, 0]), 1 / 8)


def test_sampler_modes():
    assert Sampler("lattice", 4).nodes(2).shape == (16, 2)
    a = Sampler("monte-carlo", 10, seed=3).nodes(1)
    b = Sampler("monte-carlo", 10, seed=3).nodes(1)
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        Sampler("sobol")


def test_grid_expectation_periodic_mean():
    s = 3
    h = 2.0**-s
    # mean over one period of cos^2 is 1/2
    val = grid_expectation(lambda v: math.cos(2 * math.pi * v[0] / h) ** 2, 1, default_sampler(s))
    assert abs(val - 0.5) < 1e-12


def test_grid_expectation_independent_of_map():
    from concurrent.futures import ThreadPoolExecutor

    F = lambda v: complex(np.sin(3 * v[0]), v[0] ** 2)
    serial = grid_expectation(F, 1, Sampler("lattice", 50))
    with ThreadPoolExecutor(4) as ex:
        par = grid_expectation(F, 1, Sampler("lattice", 50), ex.map)
    assert serial == par
