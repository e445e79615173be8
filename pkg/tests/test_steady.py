import numpy as np
import pytest

from sktlab import steady
from sktlab.analytic import TrigPoly
from sktlab.errors import NoConvergence
from sktlab.grid import Grid, GridFn, integrate
from sktlab.model import ModelParams, constant_state, reaction_f, reaction_g

from conftest import P1, PW, U_STAR, V_STAR


def _dense_from_band(ab, lu):
    l, u = lu
    n = ab.shape[1]
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if -l <= j - i <= u:
                A[i, j] = ab[u + i - j, j]
    return A


def _fd_jacobian(res_fn, x0, m):
    J = np.zeros((m, m))
    base = res_fn(x0)
    for k in range(m):
        step = 1e-7 * max(1.0, abs(x0[k]))
        xp = x0.copy(); xp[k] += step
        xm = x0.copy(); xm[k] -= step
        J[:, k] = (res_fn(xp) - res_fn(xm)) / (2.0 * step)
    return J, base


@pytest.fixture
def p1r():
    return ModelParams(**P1).with_rates(50.0, 50.0)


def test_uv_jacobian_matches_fd(p1r, rng):
    g = Grid(16)
    h = g.h
    n = g.n_cells
    u = rng.uniform(0.5, 3.0, n)
    v = rng.uniform(0.5, 3.0, n)

    def res(x):
        r1, r2 = steady._residual_values(p1r, x[0::2], x[1::2], h)
        out = np.empty(2 * n)
        out[0::2] = r1
        out[1::2] = r2
        return out

    x0 = np.empty(2 * n)
    x0[0::2] = u
    x0[1::2] = v
    J_fd, _ = _fd_jacobian(res, x0, 2 * n)
    J = _dense_from_band(steady._jacobian_banded(p1r, u, v, h), (3, 3))
    assert np.max(np.abs(J - J_fd)) < 1e-4 * np.max(np.abs(J_fd))


def test_wz_jacobian_matches_fd(p1r, rng):
    g = Grid(16)
    h = g.h
    n = g.n_cells
    u = rng.uniform(0.5, 3.0, n)
    v = rng.uniform(0.5, 3.0, n)
    w = p1r.d1 * u - p1r.gamma() * p1r.d2 * v
    z = p1r.d1 * u / p1r.alpha + u * v

    def res(x):
        r1, r2, _, _ = steady._wz_residual(p1r, x[0::2], x[1::2], h)
        out = np.empty(2 * n)
        out[0::2] = r1
        out[1::2] = r2
        return out

    x0 = np.empty(2 * n)
    x0[0::2] = w
    x0[1::2] = z
    J_fd, _ = _fd_jacobian(res, x0, 2 * n)
    J = _dense_from_band(steady._wz_jacobian_banded(p1r, w, z, h), (2, 2))
    assert np.max(np.abs(J - J_fd)) < 1e-4 * np.max(np.abs(J_fd))


def test_wq_jacobian_matches_fd(p1r, rng):
    g = Grid(16)
    h = g.h
    n = g.n_cells
    u = rng.uniform(0.5, 3.0, n)
    v = rng.uniform(0.5, 3.0, n)
    w = p1r.d1 * u - p1r.gamma() * p1r.d2 * v
    q = np.log(u * v)

    def res(x):
        r1, r2, _, _ = steady._wq_residual(p1r, x[0::2], x[1::2], h)
        out = np.empty(2 * n)
        out[0::2] = r1
        out[1::2] = r2
        return out

    x0 = np.empty(2 * n)
    x0[0::2] = w
    x0[1::2] = q
    J_fd, _ = _fd_jacobian(res, x0, 2 * n)
    J = _dense_from_band(steady._wq_jacobian_banded(p1r, w, q, h), (3, 3))
    assert np.max(np.abs(J - J_fd)) < 1e-4 * np.max(np.abs(J_fd))


def test_constant_state_is_exact_solution(grid64):
    for alpha in (0.0, 10.0, 1e4):
        p = ModelParams(**P1).with_rates(alpha, max(alpha, 1.0))
        cs = constant_state(p)
        r1, r2 = steady._residual_values(
            p, np.full(64, cs.u_star), np.full(64, cs.v_star), grid64.h)
        assert max(np.max(np.abs(r1)), np.max(np.abs(r2))) < 1e-10


def test_newton_recovers_constant_from_perturbation(grid64):
    p = ModelParams(**P1).with_rates(10.0, 10.0)
    x = grid64.x
    u0 = GridFn(grid64, U_STAR * (1 + 0.2 * np.cos(np.pi * x)))
    v0 = GridFn(grid64, V_STAR * (1 - 0.2 * np.cos(np.pi * x)))
    st = steady.newton_solve(p, u0, v0, tol=1e-11)
    assert np.max(np.abs(st.u.values - U_STAR)) < 1e-9
    assert np.max(np.abs(st.v.values - V_STAR)) < 1e-9
    assert st.certificate_ok


def test_all_three_solvers_agree(grid64):
    p = ModelParams(**P1).with_rates(100.0, 100.0)
    x = grid64.x
    u0 = GridFn(grid64, U_STAR * (1 + 0.1 * np.cos(np.pi * x)))
    v0 = GridFn(grid64, V_STAR * (1 - 0.1 * np.cos(np.pi * x)))
    a = steady.newton_solve(p, u0, v0)
    w0 = GridFn(grid64, p.d1 * u0.values - p.d2 * v0.values)
    z0 = GridFn(grid64, p.d1 * u0.values / p.alpha + u0.values * v0.values)
    b = steady.newton_solve_wz(p, w0, z0)
    c = steady.newton_solve_wq(p, w0, u0.values * v0.values)
    for other in (b, c):
        assert np.max(np.abs(a.u.values - other.u.values)) < 1e-8
        assert np.max(np.abs(a.v.values - other.v.values)) < 1e-8


def test_wq_solver_handles_extreme_rates(grid64):
    # the direct solver is hopeless at this conditioning; the transformed
    # one converges from a rough warm start
    p = ModelParams(**P1).with_rates(1e4, 1e4)
    w0 = GridFn(grid64, np.full(64, p.d1 * U_STAR - p.d2 * V_STAR))
    st = steady.newton_solve_wq(p, w0, U_STAR * V_STAR)
    assert np.max(np.abs(st.u.values - U_STAR)) < 1e-8


def test_integral_of_f_vanishes_on_converged_states(grid64):
    # zero-flux boundary forces the integral of each kinetic term to zero
    p = ModelParams(**P1).with_rates(100.0, 100.0)
    x = grid64.x
    u0 = GridFn(grid64, U_STAR * (1 + 0.15 * np.cos(2 * np.pi * x)))
    v0 = GridFn(grid64, V_STAR * (1 - 0.15 * np.cos(2 * np.pi * x)))
    st = steady.newton_solve(p, u0, v0)
    f = GridFn(grid64, reaction_f(p, st.u.values, st.v.values))
    g = GridFn(grid64, reaction_g(p, st.u.values, st.v.values))
    assert abs(integrate(f)) < 1e-8
    assert abs(integrate(g)) < 1e-8


def test_reduction_identity_defect_random_fields(rng):
    p = ModelParams(**P1).with_rates(37.0, 11.0)
    for _ in range(10):
        uf = TrigPoly.random(rng, 6, base=2.0, amplitude=1.0)
        vf = TrigPoly.random(rng, 6, base=3.0, amplitude=1.5)
        assert steady.reduction_identity_defect(p, uf, vf) < 1e-12


def test_time_march_preserves_positivity(grid64, pw):
    p = pw.with_rates(5.0, 5.0)
    u0 = GridFn(grid64, np.full(64, 0.5))
    v0 = GridFn(grid64, np.full(64, 0.5))
    u, v = steady.time_march(p, u0, v0, dt=1e-3, t_end=1.0)
    assert np.min(u.values) > 0.0
    assert np.min(v.values) > 0.0


def test_march_then_newton_weak_regime(grid64, pw):
    # weak competition: marching lands in the coexistence basin
    p = pw.with_rates(5.0, 5.0)
    cs = constant_state(p)
    x = grid64.x
    u0 = GridFn(grid64, cs.u_star * (1 + 0.4 * np.cos(np.pi * x)))
    v0 = GridFn(grid64, cs.v_star * (1 - 0.4 * np.cos(np.pi * x)))
    st = steady.march_then_newton(p, u0, v0, dt=1e-3, t_end=5.0)
    assert np.max(np.abs(st.u.values - cs.u_star)) < 1e-8


def test_max_principle_diagnostic(grid64):
    p = ModelParams(**P1).with_rates(100.0, 100.0)
    x = grid64.x
    u0 = GridFn(grid64, U_STAR * (1 + 0.1 * np.cos(np.pi * x)))
    v0 = GridFn(grid64, V_STAR * (1 - 0.1 * np.cos(np.pi * x)))
    st = steady.newton_solve(p, u0, v0)
    f_at, g_at = steady.check_max_principle(st)
    scale = (p.d2 + p.beta * st.u_max) * p.a1 + p.alpha * st.v_max * p.a2
    assert f_at >= -1e-6 * scale
    assert g_at >= -1e-6 * scale


def test_newton_reports_nonconvergence(grid64):
    p = ModelParams(**P1).with_rates(100.0, 100.0)
    x = Grid(64).x
    u0 = GridFn(grid64, U_STAR * (1 + 0.3 * np.cos(np.pi * x)))
    v0 = GridFn(grid64, V_STAR * (1 - 0.3 * np.cos(np.pi * x)))
    with pytest.raises(NoConvergence):
        steady.newton_solve(p, u0, v0, max_iter=0)
