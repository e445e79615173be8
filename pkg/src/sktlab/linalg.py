"""Banded and bordered direct solves shared by the nonlinear solvers.

Everything on the grid reduces to tridiagonal or small-bandwidth systems;
the nonlocal constraint and continuation conditions add a handful of dense
border rows/columns, which are eliminated by a Schur complement on the
border block so each Newton step stays O(n).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded


def residual_floor(h: float, *scales: float) -> float:
    """Rounding floor of a second-difference residual: applying the 1/h^2
    stencil to fields of the given magnitudes cannot produce residuals
    smaller than a few ulps of scale/h^2, so no tolerance below this value
    is achievable."""
    scale = max(1.0, *scales) if scales else 1.0
    return 4.0 * np.finfo(float).eps * scale / (h * h)


def lap_stencil_diag(n: int, h: float) -> np.ndarray:
    """Diagonal of the Neumann Laplacian stencil (mirror ghosts)."""
    d = np.full(n, -2.0 / (h * h))
    d[0] = d[-1] = -1.0 / (h * h)
    return d


def lap_band(n: int, h: float) -> np.ndarray:
    """Neumann Laplacian in solve_banded's (1, 1) layout."""
    inv = 1.0 / (h * h)
    ab = np.zeros((3, n))
    ab[0, 1:] = inv
    ab[1, :] = lap_stencil_diag(n, h)
    ab[2, :-1] = inv
    return ab


def lap_of_diag_band(m: np.ndarray, h: float) -> np.ndarray:
    """Banded form of f -> laplacian(m * f) for a nodal multiplier m."""
    n = m.size
    inv = 1.0 / (h * h)
    ab = np.zeros((3, n))
    ab[0, 1:] = inv * m[1:]
    ab[1, :] = lap_stencil_diag(n, h) * m
    ab[2, :-1] = inv * m[:-1]
    return ab


def solve_tridiag(ab: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return solve_banded((1, 1), ab, rhs)


def solve_bordered(l_and_u, ab, border_cols, border_rows, corner, rhs_top, rhs_bot):
    """Solve [[A, B], [C, D]] [x; y] = [rhs_top; rhs_bot] with banded A.

    border_cols is (n, k), border_rows (k, n), corner (k, k).  The banded
    factorization is applied to a stacked right-hand side and the k x k
    Schur complement closed densely.
    """
    border_cols = np.atleast_2d(border_cols)
    if border_cols.shape[0] != rhs_top.size:
        border_cols = border_cols.T
    border_rows = np.atleast_2d(border_rows)
    corner = np.atleast_2d(corner)
    rhs_bot = np.atleast_1d(rhs_bot)

    stacked = np.column_stack([rhs_top, border_cols])
    X = solve_banded(l_and_u, ab, stacked)
    x_f, X_b = X[:, 0], X[:, 1:]
    schur = corner - border_rows @ X_b
    y = np.linalg.solve(schur, rhs_bot - border_rows @ x_f)
    x = x_f - X_b @ y
    return x, y
