import numpy as np
from scipy.linalg import solve_banded

from sktlab.linalg import (lap_band, lap_of_diag_band, lap_stencil_diag,
                           residual_floor, solve_bordered, solve_tridiag)


def _dense_from_band(ab, lu):
    l, u = lu
    n = ab.shape[1]
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if -l <= j - i <= u:
                A[i, j] = ab[u + i - j, j]
    return A


def test_residual_floor_scaling():
    assert residual_floor(0.5) == residual_floor(0.5, 0.5)  # clamps at 1
    assert np.isclose(residual_floor(0.1, 10.0), 10.0 * residual_floor(0.1, 1.0))
    assert np.isclose(residual_floor(0.1), 4.0 * residual_floor(0.2))


def test_lap_band_matches_stencil(rng):
    n, h = 32, 0.03
    ab = lap_band(n, h)
    A = _dense_from_band(ab, (1, 1))
    f = rng.normal(size=n)
    ref = np.zeros(n)
    inv = 1.0 / (h * h)
    ref[1:-1] = (f[:-2] - 2.0 * f[1:-1] + f[2:]) * inv
    ref[0] = (f[1] - f[0]) * inv
    ref[-1] = (f[-2] - f[-1]) * inv
    assert np.allclose(A @ f, ref, atol=1e-11)


def test_lap_of_diag_band(rng):
    n, h = 24, 0.05
    m = rng.uniform(0.5, 2.0, n)
    f = rng.normal(size=n)
    A = _dense_from_band(lap_of_diag_band(m, h), (1, 1))
    L = _dense_from_band(lap_band(n, h), (1, 1))
    assert np.allclose(A @ f, L @ (m * f), atol=1e-10)


def test_solve_tridiag(rng):
    n, h = 40, 0.02
    ab = lap_band(n, h).copy()
    ab[1, :] -= 1.0  # shift to make it invertible
    rhs = rng.normal(size=n)
    x = solve_tridiag(ab, rhs)
    A = _dense_from_band(ab, (1, 1))
    assert np.max(np.abs(A @ x - rhs)) < 1e-8


def test_solve_bordered_matches_dense(rng):
    n, k, h = 30, 2, 0.04
    ab = lap_band(n, h).copy()
    ab[1, :] -= 2.0
    A = _dense_from_band(ab, (1, 1))
    B = rng.normal(size=(n, k))
    C = rng.normal(size=(k, n))
    D = rng.normal(size=(k, k)) + 5.0 * np.eye(k)
    rt = rng.normal(size=n)
    rb = rng.normal(size=k)
    x, y = solve_bordered((1, 1), ab, B, C, D, rt, rb)
    full = np.block([[A, B], [C, D]])
    ref = np.linalg.solve(full, np.concatenate([rt, rb]))
    assert np.max(np.abs(np.concatenate([x, y]) - ref)) < 1e-8


def test_solve_bordered_single_border(rng):
    n, h = 20, 0.05
    ab = lap_band(n, h).copy()
    ab[1, :] -= 1.5
    A = _dense_from_band(ab, (1, 1))
    b = rng.normal(size=n)
    c = rng.normal(size=n)
    d = 3.0
    rt = rng.normal(size=n)
    rb = 0.7
    x, y = solve_bordered((1, 1), ab, b, c, np.array([[d]]), rt, rb)
    full = np.block([[A, b[:, None]], [c[None, :], np.array([[d]])]])
    ref = np.linalg.solve(full, np.concatenate([rt, [rb]]))
    assert np.max(np.abs(np.concatenate([x, y]) - ref)) < 1e-9


def test_stencil_diag_neumann_rows():
    d = lap_stencil_diag(10, 0.1)
    assert np.allclose([d[0], d[-1]], -100.0)
    assert np.allclose(d[1:-1], -200.0)
    assert d[0] == d[-1] == d[1] / 2.0
