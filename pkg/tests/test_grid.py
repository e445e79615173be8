import math

import numpy as np
import pytest

from sktlab.grid import (Grid, GridFn, discrete_eigenvalue, gradient,
                         integrate, laplacian_values, neumann_eigenpair,
                         neumann_laplacian)


def test_grid_geometry(grid64):
    assert grid64.h == 1.0 / 64
    x = grid64.x
    assert x[0] == grid64.h / 2
    assert abs(x[-1] - (1.0 - grid64.h / 2)) < 1e-15


def test_integrate_exact_for_cosine_modes(grid64):
    # midpoint rule integrates the discrete cosine modes exactly
    for j in range(1, 6):
        f = GridFn.from_callable(grid64, lambda x: np.cos(j * np.pi * x))
        assert abs(integrate(f)) < 1e-14
    const = GridFn.constant(grid64, 3.5)
    assert abs(integrate(const) - 3.5) < 1e-14


def test_laplacian_annihilates_constants(grid64):
    c = GridFn.constant(grid64, 2.0)
    assert np.max(np.abs(neumann_laplacian(c).values)) == 0.0


def test_eigenpair_is_exact(grid64):
    for j in (1, 2, 5):
        lam, phi = neumann_eigenpair(grid64, j)
        res = neumann_laplacian(phi).values + lam * phi.values
        assert np.max(np.abs(res)) < 1e-10 * lam
        # unit discrete L2 norm
        assert abs(grid64.h * np.sum(phi.values ** 2) - 1.0) < 1e-13


def test_discrete_eigenvalue_approaches_continuum():
    lam_c = math.pi ** 2
    errs = [abs(discrete_eigenvalue(Grid(n), 1) - lam_c) for n in (64, 128)]
    assert 3.5 < errs[0] / errs[1] < 4.5  # O(h^2)


def test_eigenvalue_index_bounds(grid64):
    with pytest.raises(IndexError):
        discrete_eigenvalue(grid64, 64)
    with pytest.raises(IndexError):
        discrete_eigenvalue(grid64, -1)


def test_gradient_of_linear_field(grid64):
    f = GridFn.from_callable(grid64, lambda x: 2.0 * x)
    g = gradient(f).values
    # exact in the interior; one-sided at the ends
    assert np.max(np.abs(g[1:-1] - 2.0)) < 1e-12


def test_gridfn_validation(grid64):
    with pytest.raises(ValueError):
        GridFn(grid64, np.zeros(63))
    with pytest.raises(ValueError):
        Grid(4)
    with pytest.raises(ValueError):
        Grid(64, -1.0)


def test_gridfn_immutable(grid64):
    f = GridFn.constant(grid64, 1.0)
    with pytest.raises(ValueError):
        f.values[0] = 2.0
