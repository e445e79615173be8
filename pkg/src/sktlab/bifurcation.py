"""Local bifurcation of the incomplete-segregation system in d1.

The constant branch w*(d1) loses invertibility of its linearization when a
scalar potential crosses a Neumann eigenvalue; this module provides the
closed-form threshold, its discrete-eigenvalue counterpart found by
bisection, an inverse-iteration oracle for the critical eigenvalue, and
branch switching with amplitude continuation of the emerging nonconstant
solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketError, NoConvergence, NoThreshold, TauCollapse
from .grid import (Grid, GridFn, discrete_eigenvalue, integrate,
                   laplacian_values, neumann_eigenpair)
from .limits import LimitParams, _is_linearization, _is_residual_values, uv_from_w_tau
from .linalg import lap_band, residual_floor, solve_bordered, solve_tridiag
from .model import constant_state

_MIN_STEP = 2.0 ** -20


@dataclass(frozen=True)
class BifurcationPoint:
    j: int
    lambda_j: float
    delta_j: float
    phi_j: GridFn


@dataclass(frozen=True)
class BranchPoint:
    s: float
    d1: float
    tau: float
    w: GridFn
    arclength: float
    newton_iters: int


@dataclass(frozen=True)
class Branch:
    origin: BifurcationPoint
    points: tuple            # ordered by s, constant state at s = 0 included
    truncated: bool = False


def w_star(lp: LimitParams, d1: float) -> float:
    """Constant-branch value d1*u* - gamma*d2*v*."""
    cs = constant_state(lp)
    return d1 * cs.u_star - lp.gamma * lp.d2 * cs.v_star


def kinetic_strength(lp: LimitParams) -> float:
    """K = (c1 + gamma*b2)*tau* - b1*u*^2 - gamma*c2*v*^2.

    The numerator of the linearization potential; its sign decides whether
    any bifurcation threshold exists at all.
    """
    cs = constant_state(lp)
    return ((lp.c1 + lp.gamma * lp.b2) * cs.tau_star
            - lp.b1 * cs.u_star ** 2 - lp.gamma * lp.c2 * cs.v_star ** 2)


def potential(lp: LimitParams, d1: float) -> float:
    """K / (d1*u* + gamma*d2*v*): the scalar multiplying the identity in the
    linearized field operator at the constant state."""
    cs = constant_state(lp)
    return kinetic_strength(lp) / (d1 * cs.u_star + lp.gamma * lp.d2 * cs.v_star)


def l22_value(lp: LimitParams, d1: float, length: float = 1.0) -> float:
    """Scalar block of the linearized constraint in the constant/scalar
    direction; strictly negative for positive parameters."""
    if d1 <= 0.0:
        raise ValueError("d1 must be positive")
    cs = constant_state(lp)
    return (-cs.u_star * length / (4.0 * (d1 * cs.u_star + lp.gamma * lp.d2 * cs.v_star))
            * (lp.b1 / d1 + lp.c1 / (lp.gamma * lp.d2)))


def l21_value(lp: LimitParams, d1: float, psi: GridFn) -> float:
    """Constraint-row action on a field direction at the constant state.

    Equals (scalar) * integrate(psi), so it vanishes identically on
    mean-zero fields; returned in that factored form on purpose.
    """
    cs = constant_state(lp)
    w0 = w_star(lp, d1)
    lp1 = lp.with_d1(d1)
    _, _, f_w, _ = _is_linearization(lp1, np.array([w0]), cs.tau_star)
    return float(f_w[0]) * integrate(psi)


def delta_j(lp: LimitParams, j: int, length: float = 1.0) -> float:
    """Closed-form threshold for mode j: (K/lambda_j - gamma*d2*v*)/u*.

    Uses the continuum eigenvalue (j*pi/L)^2; raises NoThreshold when K <= 0
    or the rearrangement is nonpositive.
    """
    if j < 1:
        raise ValueError("mode index must be >= 1")
    K = kinetic_strength(lp)
    if K <= 0.0:
        raise NoThreshold("K <= 0: no positive threshold for any mode")
    cs = constant_state(lp)
    lam = (j * math.pi / length) ** 2
    d1 = (K / lam - lp.gamma * lp.d2 * cs.v_star) / cs.u_star
    if d1 <= 0.0:
        raise NoThreshold(f"mode {j}: rearranged threshold is nonpositive")
    return d1


def detect_crossing(lp: LimitParams, j: int, g: Grid,
                    bracket: tuple[float, float]) -> BifurcationPoint:
    """Bisection on potential(d1) - lambda_j^h with the discrete eigenvalue.

    The zero of this scalar is exactly where the discrete linearized field
    operator, restricted to mean-zero fields, becomes singular in the
    direction of the j-th cosine mode.
    """
    if j < 1:
        raise ValueError("mode index must be >= 1 (the constant mode is excluded)")
    lam_h = discrete_eigenvalue(g, j)

    def fn(d1):
        return potential(lp, d1) - lam_h

    lo, hi = float(bracket[0]), float(bracket[1])
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        root = lo
    elif fhi == 0.0:
        root = hi
    else:
        if flo * fhi > 0.0:
            raise BracketError(f"no sign change of potential - lambda_{j}^h on {bracket}")
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            fm = fn(mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if flo * fm < 0.0:
                hi, fhi = mid, fm
            else:
                lo, flo = mid, fm
        root = 0.5 * (lo + hi)
    _, phi = neumann_eigenpair(g, j)
    return BifurcationPoint(j=j, lambda_j=lam_h, delta_j=root, phi_j=phi)


def l11_min_eigenvalue(lp: LimitParams, d1: float, g: Grid,
                       iters: int = 60) -> float:
    """Smallest-magnitude eigenvalue of the discrete linearized field block
    laplacian + potential(d1), restricted to mean-zero fields, by shifted
    inverse iteration."""
    n = g.n_cells
    pot = potential(lp, d1)
    shift = 1e-13 * max(1.0, abs(pot))
    ab = lap_band(n, g.h)
    ab[1, :] += pot - shift
    rng = np.random.default_rng(7)
    x = rng.standard_normal(n)
    x -= x.mean()
    x /= np.linalg.norm(x)
    lam = pot
    for _ in range(iters):
        y = solve_tridiag(ab, x)
        y -= y.mean()
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0.0:
            break
        y /= ny
        ay = laplacian_values(y, g.h) + pot * y
        lam_new = float(y @ ay)
        if abs(lam_new - lam) <= 1e-16 * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam, x = lam_new, y
    return lam


def _branch_residual(lp1, w, tau, d1, phi, w0_const, s_target, h):
    fld, con = _is_residual_values(lp1, w, tau, h)
    phase = h * float(np.sum(phi * (w - w0_const))) - s_target
    return fld, con, phase


def _branch_newton(lp: LimitParams, w, tau, d1, phi, s_target, g,
                   tol=1e-11, max_iter=30):
    """Corrector for the amplitude-parametrized branch system.

    Unknowns (w, tau, d1); equations: field residual, integral constraint,
    phase condition fixing the Phi_j-amplitude of w - w*(d1) at s_target.
    """
    h = g.h
    cs = constant_state(lp)
    for it in range(max_iter):
        lp1 = lp.with_d1(d1)
        w0c = w_star(lp, d1)
        fld, con, phase = _branch_residual(lp1, w, tau, d1, phi, w0c, s_target, h)
        rnorm = max(float(np.max(np.abs(fld))), abs(con), abs(phase))
        if rnorm <= max(tol, residual_floor(h, float(np.max(np.abs(w))))):
            return w, tau, d1, it
        q_w, q_t, f_w, f_t = _is_linearization(lp1, w, tau)

        # d1 enters through the transform (u, v)(w, tau; d1) and the
        # constant-branch offset in the phase row
        u, v = uv_from_w_tau(lp1, w, tau)
        S = np.sqrt(w * w + 4.0 * lp.gamma * d1 * lp.d2 * tau)
        u_d = lp.gamma * lp.d2 * tau / (d1 * S) - u / d1
        v_d = tau / S
        fu = lp.a1 - 2.0 * lp.b1 * u - lp.c1 * v
        fv = -lp.c1 * u
        gu = -lp.b2 * v
        gv = lp.a2 - lp.b2 * u - 2.0 * lp.c2 * v
        q_d = (fu - lp.gamma * gu) * u_d + (fv - lp.gamma * gv) * v_d
        f_d = fu * u_d + fv * v_d

        ab = lap_band(g.n_cells, h)
        ab[1, :] += q_w
        cols = np.column_stack([q_t, q_d])
        rows = np.vstack([h * f_w, h * phi])
        corner = np.array([
            [h * float(np.sum(f_t)), h * float(np.sum(f_d))],
            [0.0, -cs.u_star * h * float(np.sum(phi))],
        ])
        rhs_bot = np.array([-con, -phase])
        dxy = solve_bordered((1, 1), ab, cols, rows, corner, -fld, rhs_bot)
        dw, (dtau, dd1) = dxy
        step = 1.0
        while True:
            wt, taut, d1t = w + step * dw, tau + step * dtau, d1 + step * dd1
            if taut <= 1e-12 or d1t <= 0.0:
                step *= 0.5
                if step < _MIN_STEP:
                    raise TauCollapse("branch iterate left the admissible cone", tau=taut)
                continue
            lp1t = lp.with_d1(d1t)
            t_fld, t_con, t_phase = _branch_residual(
                lp1t, wt, taut, d1t, phi, w_star(lp, d1t), s_target, h)
            tnorm = max(float(np.max(np.abs(t_fld))), abs(t_con), abs(t_phase))
            if tnorm <= (1.0 - 1e-4 * step) * rnorm \
                    or tnorm <= max(tol, residual_floor(h, float(np.max(np.abs(wt))))):
                break
            step *= 0.5
            if step < _MIN_STEP:
                raise NoConvergence("branch corrector line search stalled",
                                    residual=rnorm, iterations=it)
        w, tau, d1 = wt, taut, d1t
    raise NoConvergence("branch corrector did not converge",
                        residual=rnorm, iterations=max_iter)


def switch_and_continue(lp: LimitParams, bp: BifurcationPoint, s_max: float,
                        ds: float, g: Grid | None = None,
                        tol: float = 1e-11) -> Branch:
    """Continue the branch emerging at bp in its amplitude s, both ways.

    The predictor is linear at the first step (constant state plus s times
    the eigenfunction) and secant afterwards; the amplitude step adapts to
    the corrector's iteration count.  A failing step truncates the branch
    on that side and sets the flag rather than raising.
    """
    if g is None:
        g = bp.phi_j.grid
    cs = constant_state(lp)
    phi = bp.phi_j.values
    base = BranchPoint(s=0.0, d1=bp.delta_j, tau=cs.tau_star,
                       w=GridFn(g, np.full(g.n_cells, w_star(lp, bp.delta_j))),
                       arclength=0.0, newton_iters=0)
    truncated = False
    sides = []
    for sign in (+1.0, -1.0):
        pts = []
        prev = (base.w.values.copy(), base.tau, base.d1)
        prev2 = None
        s_prev = 0.0
        step = ds
        arclen = 0.0
        while abs(s_prev) < s_max - 1e-14:
            s_next = s_prev + sign * step
            if abs(s_next) > s_max:
                s_next = sign * s_max
            if prev2 is None:
                w_pred = prev[0] + (s_next - s_prev) * phi
                tau_pred, d1_pred = prev[1], prev[2]
            else:
                frac = (s_next - s_prev) / (s_prev - s_prev2)
                w_pred = prev[0] + frac * (prev[0] - prev2[0])
                tau_pred = prev[1] + frac * (prev[1] - prev2[1])
                d1_pred = prev[2] + frac * (prev[2] - prev2[2])
            try:
                w, tau, d1, iters = _branch_newton(
                    lp, w_pred.copy(), tau_pred, d1_pred, phi, s_next, g, tol=tol)
            except (NoConvergence, TauCollapse):
                step *= 0.5
                if step < 1e-6 * ds:
                    truncated = True
                    break
                continue
            dl = math.sqrt(g.h * float(np.sum((w - prev[0]) ** 2))
                           + (tau - prev[1]) ** 2 + (d1 - prev[2]) ** 2)
            arclen += dl
            pts.append(BranchPoint(s=s_next, d1=d1, tau=tau, w=GridFn(g, w),
                                   arclength=arclen, newton_iters=iters))
            prev2, s_prev2 = prev, s_prev
            prev, s_prev = (w, tau, d1), s_next
            if iters <= 3:
                step = min(step * 1.5, 10.0 * ds)
            elif iters >= 7:
                step = max(step * 0.5, 1e-6 * ds)
        sides.append(pts)
    plus, minus = sides
    ordered = [BranchPoint(p.s, p.d1, p.tau, p.w, -p.arclength, p.newton_iters)
               for p in reversed(minus)] + [base] + plus
    return Branch(origin=bp, points=tuple(ordered), truncated=truncated)
