"""Orchestration of the simultaneous large-rate limit.

Solves the full system along a schedule of growing rate pairs with warm
starts, tracks the transformed fields w_n, z_n, estimates the limiting
density product from the mean of z_n, and classifies the run as incomplete
or complete segregation.  The matched limiting-system solve quantifies how
well the final member of the sequence is explained by its limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import limits, steady
from .errors import NoConvergence
from .grid import GridFn, integrate
from .limits import CSState, ISState, LimitParams
from .model import ModelParams, constant_state
from .steady import SteadyState


@dataclass(frozen=True)
class StepRecord:
    alpha: float
    beta: float
    gamma: float
    tau_hat: float
    uv_defect: float
    w_drift: float
    residual_inf: float


@dataclass(frozen=True)
class LimitRunReport:
    gamma_target: float
    steps: tuple
    classification: str            # "Incomplete" | "Complete" | "Undetermined"
    final_state: SteadyState
    final_w: GridFn
    tau_star: float
    complete_tol: float
    limit_comparison: float = np.nan


def geometric_schedule(alpha0: float, gamma: float, n_steps: int,
                       ratio: float = 10.0) -> list[tuple[float, float]]:
    """Rate pairs (alpha_k, beta_k) with alpha growing geometrically and
    alpha/beta held at gamma."""
    return [(alpha0 * ratio ** k, alpha0 * ratio ** k / gamma)
            for k in range(n_steps)]


def run_sequence(base: ModelParams, schedule, seed_state: SteadyState,
                 gamma_target: float | None = None,
                 complete_tol: float | None = None,
                 newton_tol: float = 1e-11) -> LimitRunReport:
    """Warm-start continuation in the rates along a strictly increasing
    schedule; per step computes (w_n, z_n) and the segregation diagnostics.

    Classification at the final step: Complete if the mean of z fell below
    complete_tol (default 1e-3 of tau*) and w changes sign; Incomplete if it
    stabilized above the threshold; Undetermined otherwise.
    """
    pairs = [(float(a), float(b)) for a, b in schedule]
    if not pairs:
        raise ValueError("empty schedule")
    for (a0, b0), (a1, b1) in zip(pairs, pairs[1:]):
        if not (a1 > a0 and b1 > b0):
            raise ValueError("schedule must be strictly increasing in both rates")
    if gamma_target is None:
        gamma_target = pairs[-1][0] / pairs[-1][1]
    cs = constant_state(base)
    if complete_tol is None:
        complete_tol = 1e-3 * cs.tau_star

    state = seed_state
    p0 = base.with_rates(*pairs[0])
    w_prev = limits.w_z_from_uv(p0, state.u, state.v)[0].values
    records = []
    w = z = None
    for k, (alpha, beta) in enumerate(pairs):
        p = base.with_rates(alpha, beta)
        try:
            state = _solve_step(p, state, newton_tol)
        except NoConvergence as exc:
            raise NoConvergence(f"schedule step {k} (alpha={alpha:g}, beta={beta:g}): {exc}",
                                residual=exc.residual, iterations=exc.iterations) from exc
        w, z = limits.w_z_from_uv(p, state.u, state.v)
        tau_hat = integrate(z) / w.grid.length
        uv_defect = float(np.max(np.abs(state.u.values * state.v.values - tau_hat)))
        drift = float(np.max(np.abs(w.values - w_prev)))
        records.append(StepRecord(alpha=alpha, beta=beta, gamma=alpha / beta,
                                  tau_hat=tau_hat, uv_defect=uv_defect,
                                  w_drift=drift, residual_inf=state.residual_inf))
        w_prev = w.values

    tau_final = records[-1].tau_hat
    changes_sign = float(np.min(w.values)) < 0.0 < float(np.max(w.values))
    if tau_final < complete_tol and changes_sign:
        classification = "Complete"
    elif tau_final >= complete_tol and _tau_stabilized(records):
        classification = "Incomplete"
    else:
        classification = "Undetermined"

    return LimitRunReport(gamma_target=gamma_target, steps=tuple(records),
                          classification=classification, final_state=state,
                          final_w=w, tau_star=cs.tau_star,
                          complete_tol=complete_tol)


def _solve_step(p: ModelParams, state: SteadyState, tol: float) -> SteadyState:
    """One warm-started solve at the next rate pair.

    The log-product formulation is preferred (it is the one that stays
    conditioned as the rates grow); states with a vanishing density cannot
    be represented in log variables, so those fall back to the direct
    solver.
    """
    u = state.u.values
    v = state.v.values
    prod = u * v
    floor = 1e-12 * max(float(np.max(prod)), 1.0)
    if float(np.min(prod)) > floor:
        gamma = p.alpha / p.beta
        w0 = GridFn(state.u.grid, p.d1 * u - gamma * p.d2 * v)
        try:
            return steady.newton_solve_wq(p, w0, prod, tol=tol)
        except NoConvergence:
            pass
    return steady.newton_solve(p, state.u, state.v, tol=tol)


def _tau_stabilized(records) -> bool:
    if len(records) < 2:
        return True
    t0, t1 = records[-2].tau_hat, records[-1].tau_hat
    return abs(t1 - t0) <= 0.2 * max(abs(t1), 1e-30)


def match_limit(report: LimitRunReport, lp: LimitParams | None = None) -> float:
    """Solve the matched limiting system warm-started from the final step
    and return sup|w_N - w_limit|."""
    if report.classification == "Undetermined":
        raise ValueError("cannot match an Undetermined run")
    if lp is None:
        lp = LimitParams(
            a1=report.final_state.params.a1, a2=report.final_state.params.a2,
            b1=report.final_state.params.b1, b2=report.final_state.params.b2,
            c1=report.final_state.params.c1, c2=report.final_state.params.c2,
            d1=report.final_state.params.d1, d2=report.final_state.params.d2,
            gamma=report.gamma_target)
    w_n = report.final_w
    if report.classification == "Incomplete":
        sol = limits.is_newton(lp, w_n, max(report.steps[-1].tau_hat, 1e-8))
        return float(np.max(np.abs(w_n.values - sol.w.values)))
    sol = limits.cs_solve(lp, w_n)
    return float(np.max(np.abs(w_n.values - sol.w.values)))


def segregation_diagnostics(s: SteadyState) -> tuple[float, float, bool]:
    """(min nodal u*v, max nodal u*v, near-constant flag).

    The flag is true when both densities vary by less than 1e-6 over the
    domain, which is how runs that collapsed onto a constant pair are told
    apart from genuinely patterned ones.
    """
    prod = s.u.values * s.v.values
    du = float(np.max(s.u.values) - np.min(s.u.values))
    dv = float(np.max(s.v.values) - np.min(s.v.values))
    return float(np.min(prod)), float(np.max(prod)), bool(du < 1e-6 and dv < 1e-6)
