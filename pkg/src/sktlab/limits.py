"""The two limiting systems of the simultaneous large-rate regime.

When both cross-diffusion rates blow up with their ratio tending to gamma,
solution sequences accumulate either on the incomplete-segregation system
(unknowns: a zero-flux field w and a positive constant tau = uv, coupled by
a nonlocal integral constraint) or on the complete-segregation system (a
single sign-changing field w with positive/negative-part nonlinearity).
This module provides the exact changes of variables in both directions and
Newton solvers for the two reduced systems.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoConvergence, TauCollapse
from .grid import Grid, GridFn, laplacian_values
from .linalg import lap_band, residual_floor, solve_bordered, solve_tridiag
from .model import ModelParams, reaction_f, reaction_g

_TAU_FLOOR = 1e-10
_MIN_STEP = 2.0 ** -20


@dataclass(frozen=True)
class LimitParams:
    """Kinetic and linear-diffusion coefficients plus the rate-ratio limit."""

    a1: float
    a2: float
    b1: float
    b2: float
    c1: float
    c2: float
    d1: float
    d2: float
    gamma: float

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2", "c1", "c2", "d1", "d2", "gamma"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def from_model(cls, p: ModelParams, gamma: float | None = None) -> "LimitParams":
        if gamma is None:
            gamma = p.gamma()
        return cls(a1=p.a1, a2=p.a2, b1=p.b1, b2=p.b2, c1=p.c1, c2=p.c2,
                   d1=p.d1, d2=p.d2, gamma=gamma)

    def with_d1(self, d1: float) -> "LimitParams":
        return LimitParams(a1=self.a1, a2=self.a2, b1=self.b1, b2=self.b2,
                           c1=self.c1, c2=self.c2, d1=d1, d2=self.d2,
                           gamma=self.gamma)


@dataclass(frozen=True)
class ISState:
    """Incomplete-segregation solution: field w and constant tau = uv > 0."""

    w: GridFn
    tau: float
    residual_inf: float = np.nan
    constraint: float = np.nan

    def densities(self, lp: LimitParams) -> tuple[GridFn, GridFn]:
        u, v = uv_from_w_tau(lp, self.w.values, self.tau)
        return GridFn(self.w.grid, u), GridFn(self.w.grid, v)


@dataclass(frozen=True)
class CSState:
    """Complete-segregation solution: sign-changing w, tau = 0."""

    w: GridFn
    residual_inf: float = np.nan

    def densities(self, lp: LimitParams) -> tuple[GridFn, GridFn]:
        w = self.w.values
        u = np.maximum(w, 0.0) / lp.d1
        v = np.maximum(-w, 0.0) / (lp.gamma * lp.d2)
        return GridFn(self.w.grid, u), GridFn(self.w.grid, v)


def uv_from_w_tau(lp: LimitParams, w, tau):
    """(u, v) from (w, tau): the inversion of w = d1 u - gamma d2 v under
    u v = tau.  At tau = 0 this degenerates to the positive/negative parts."""
    if np.any(np.asarray(tau) < 0.0):
        raise ValueError("tau must be nonnegative")
    w = np.asarray(w, dtype=float)
    s = np.sqrt(w * w + 4.0 * lp.gamma * lp.d1 * lp.d2 * tau)
    u = (s + w) / (2.0 * lp.d1)
    v = (s - w) / (2.0 * lp.gamma * lp.d2)
    return u, v


def w_z_from_uv(p: ModelParams, u: GridFn, v: GridFn) -> tuple[GridFn, GridFn]:
    """Forward transform: w = d1 u - (alpha/beta) d2 v, z = (d1/alpha) u + u v."""
    if p.alpha <= 0.0 or p.beta <= 0.0:
        raise ValueError("transform requires alpha, beta > 0")
    gamma = p.alpha / p.beta
    w = p.d1 * u.values - gamma * p.d2 * v.values
    z = (p.d1 / p.alpha) * u.values + u.values * v.values
    return GridFn(u.grid, w), GridFn(u.grid, z)


def uv_from_w_z(p: ModelParams, w: GridFn, z: GridFn) -> tuple[GridFn, GridFn]:
    """Exact inversion of the forward transform at finite rates.

    Both component formulas share one discriminant; the expressions are
    evaluated in the branch that avoids subtractive cancellation, which
    matters once the rates reach 1e3-1e4.
    """
    u, v = uv_from_w_z_values(p, w.values, z.values)
    return GridFn(w.grid, u), GridFn(w.grid, v)


def uv_from_w_z_values(p: ModelParams, wv: np.ndarray, zv: np.ndarray):
    """Raw-array version of uv_from_w_z."""
    if p.alpha <= 0.0 or p.beta <= 0.0:
        raise ValueError("transform requires alpha, beta > 0")
    gamma = p.alpha / p.beta
    c = p.d1 * p.d2 / p.beta
    disc = (wv - c) ** 2 + 4.0 * gamma * p.d1 * p.d2 * zv
    slack = 1e-14 * np.maximum(1.0, (wv - c) ** 2 + 4.0 * gamma * p.d1 * p.d2 * np.abs(zv))
    if np.any(disc < -slack):
        raise DomainError("negative discriminant in the inverse transform")
    s = np.sqrt(np.maximum(disc, 0.0))

    # u = (s + (w - c)) / (2 d1), rationalized where w - c < 0
    num_u = 4.0 * gamma * p.d1 * p.d2 * zv
    u = np.where(wv - c >= 0.0,
                 (s + (wv - c)) / (2.0 * p.d1),
                 num_u / (2.0 * p.d1 * np.maximum(s - (wv - c), 1e-300)))
    # v = (s - (w + c)) / (2 gamma d2), rationalized where w + c > 0;
    # (s^2 - (w + c)^2) = 4 d1 d2 (gamma z - w / beta)
    num_v = 4.0 * p.d1 * p.d2 * (gamma * zv - wv / p.beta)
    v = np.where(wv + c <= 0.0,
                 (s - (wv + c)) / (2.0 * gamma * p.d2),
                 num_v / (2.0 * gamma * p.d2 * np.maximum(s + (wv + c), 1e-300)))
    return u, v


def _is_residual_values(lp: LimitParams, w: np.ndarray, tau: float, h: float):
    u, v = uv_from_w_tau(lp, w, tau)
    fval = reaction_f(lp, u, v)
    gval = reaction_g(lp, u, v)
    fld = laplacian_values(w, h) + fval - lp.gamma * gval
    return fld, h * float(np.sum(fval))


def is_residual(lp: LimitParams, s: ISState) -> tuple[GridFn, float]:
    """(field residual, integral constraint value) of the incomplete system."""
    if s.tau <= 0.0:
        raise ValueError("incomplete-segregation residual needs tau > 0")
    fld, constraint = _is_residual_values(lp, s.w.values, s.tau, s.w.grid.h)
    return GridFn(s.w.grid, fld), constraint


def _is_linearization(lp: LimitParams, w: np.ndarray, tau: float):
    """Nodewise partials of q = f - gamma g and of f wrt (w, tau)."""
    u, v = uv_from_w_tau(lp, w, tau)
    s = np.sqrt(w * w + 4.0 * lp.gamma * lp.d1 * lp.d2 * tau)
    u_w = u / s
    v_w = -v / s
    u_t = lp.gamma * lp.d2 / s
    v_t = lp.d1 / s
    fu = lp.a1 - 2.0 * lp.b1 * u - lp.c1 * v
    fv = -lp.c1 * u
    gu = -lp.b2 * v
    gv = lp.a2 - lp.b2 * u - 2.0 * lp.c2 * v
    q_w = (fu - lp.gamma * gu) * u_w + (fv - lp.gamma * gv) * v_w
    q_t = (fu - lp.gamma * gu) * u_t + (fv - lp.gamma * gv) * v_t
    f_w = fu * u_w + fv * v_w
    f_t = fu * u_t + fv * v_t
    return q_w, q_t, f_w, f_t


def is_newton(lp: LimitParams, w0: GridFn, tau0: float,
              tol: float = 1e-11, max_iter: int = 40) -> ISState:
    """Bordered Newton on the field equations plus the integral constraint.

    The (n+1)-dimensional Jacobian is a tridiagonal block bordered by one
    dense column (tau derivative) and one dense row (constraint gradient),
    solved by a Schur complement on the scalar.  Iterates whose tau falls
    below 1e-10 raise TauCollapse: the complete-segregation signature, an
    informative outcome rather than a failure.
    """
    if tau0 <= 0.0:
        raise ValueError("tau0 must be positive")
    g = w0.grid
    h = g.h
    w = w0.values.copy()
    tau = float(tau0)
    fld, con = _is_residual_values(lp, w, tau, h)
    rnorm = max(float(np.max(np.abs(fld))), abs(con))

    for it in range(max_iter):
        if rnorm <= max(tol, residual_floor(h, float(np.max(np.abs(w))))):
            return ISState(w=GridFn(g, w), tau=tau,
                           residual_inf=float(np.max(np.abs(fld))), constraint=con)
        q_w, q_t, f_w, f_t = _is_linearization(lp, w, tau)
        ab = lap_band(g.n_cells, h)
        ab[1, :] += q_w
        col = q_t
        row = h * f_w
        corner = h * float(np.sum(f_t))
        dw, dtau = solve_bordered((1, 1), ab, col, row[None, :], corner,
                                  -fld, -con)
        dtau = float(dtau[0])

        lam = 1.0
        while True:
            wt = w + lam * dw
            taut = tau + lam * dtau
            if taut < _TAU_FLOOR:
                raise TauCollapse("tau fell below the collapse floor", tau=taut)
            t_fld, t_con = _is_residual_values(lp, wt, taut, h)
            tnorm = max(float(np.max(np.abs(t_fld))), abs(t_con))
            if tnorm <= (1.0 - 1e-4 * lam) * rnorm \
                    or tnorm <= max(tol, residual_floor(h, float(np.max(np.abs(wt))))):
                break
            lam *= 0.5
            if lam < _MIN_STEP:
                raise NoConvergence("line search stalled in bordered Newton",
                                    residual=rnorm, iterations=it)
        w, tau, fld, con, rnorm = wt, taut, t_fld, t_con, tnorm

    raise NoConvergence("bordered Newton did not converge",
                        residual=rnorm, iterations=max_iter)


def _cs_residual_values(lp: LimitParams, w: np.ndarray, eps: float, h: float):
    s = np.sqrt(w * w + eps * eps) if eps > 0.0 else np.abs(w)
    u = (s + w) / (2.0 * lp.d1)
    v = (s - w) / (2.0 * lp.gamma * lp.d2)
    q = reaction_f(lp, u, v) - lp.gamma * reaction_g(lp, u, v)
    return laplacian_values(w, h) + q


def _cs_q_w(lp: LimitParams, w: np.ndarray, eps: float):
    if eps > 0.0:
        s = np.sqrt(w * w + eps * eps)
        u_w = (1.0 + w / s) / (2.0 * lp.d1)
        v_w = (w / s - 1.0) / (2.0 * lp.gamma * lp.d2)
        u = (s + w) / (2.0 * lp.d1)
        v = (s - w) / (2.0 * lp.gamma * lp.d2)
    else:
        # semismooth branch: derivative of w_+ taken as 1 at w = 0
        pos = w >= 0.0
        u_w = np.where(pos, 1.0 / lp.d1, 0.0)
        v_w = np.where(pos, 0.0, -1.0 / (lp.gamma * lp.d2))
        u = np.maximum(w, 0.0) / lp.d1
        v = np.maximum(-w, 0.0) / (lp.gamma * lp.d2)
    fu = lp.a1 - 2.0 * lp.b1 * u - lp.c1 * v
    fv = -lp.c1 * u
    gu = -lp.b2 * v
    gv = lp.a2 - lp.b2 * u - 2.0 * lp.c2 * v
    return (fu - lp.gamma * gu) * u_w + (fv - lp.gamma * gv) * v_w


def _cs_newton_at_eps(lp, w, eps, h, tol, max_iter):
    fld = _cs_residual_values(lp, w, eps, h)
    rnorm = float(np.max(np.abs(fld)))
    for it in range(max_iter):
        if rnorm <= max(tol, residual_floor(h, float(np.max(np.abs(w))))):
            return w, rnorm
        ab = lap_band(w.size, h)
        ab[1, :] += _cs_q_w(lp, w, eps)
        dw = solve_tridiag(ab, -fld)
        lam = 1.0
        while True:
            wt = w + lam * dw
            t_fld = _cs_residual_values(lp, wt, eps, h)
            tnorm = float(np.max(np.abs(t_fld)))
            if tnorm <= (1.0 - 1e-4 * lam) * rnorm \
                    or tnorm <= max(tol, residual_floor(h, float(np.max(np.abs(wt))))):
                break
            lam *= 0.5
            if lam < _MIN_STEP:
                raise NoConvergence("line search stalled in smoothed Newton",
                                    residual=rnorm, iterations=it)
        w, fld, rnorm = wt, t_fld, tnorm
    raise NoConvergence("smoothed Newton did not converge",
                        residual=rnorm, iterations=max_iter)


def cs_solve(lp: LimitParams, w0: GridFn, tol: float = 1e-10,
             eps: float = 0.0, max_iter: int = 60) -> CSState:
    """Solve the complete-segregation system by smoothing continuation.

    The positive/negative parts are replaced by their sqrt(w^2 + eps^2)
    smoothing and eps is driven down geometrically from 1e-2 of the field
    scale to the requested value; eps = 0 finishes with a semismooth step
    using the fixed subgradient convention.
    """
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    g = w0.grid
    h = g.h
    w = w0.values.copy()
    scale = max(float(np.max(np.abs(w))), 1e-8)
    eps_k = 1e-2 * scale
    floor = max(eps, 1e-10 * scale)
    while eps_k > floor:
        w, _ = _cs_newton_at_eps(lp, w, eps_k, h, max(tol, 1e-10 * scale), max_iter)
        eps_k *= 0.1
    w, rnorm = _cs_newton_at_eps(lp, w, eps, h, tol, max_iter)
    return CSState(w=GridFn(g, w), residual_inf=rnorm)
