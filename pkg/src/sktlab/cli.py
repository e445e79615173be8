"""Batch front end: flat key=value configs, subcommands, CSV output.

Exit codes: 0 success, 2 solver non-convergence, 3 configuration error,
4 regime or threshold error (the requested object provably does not exist
for the given parameters).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import bifurcation, bounds, io, limits, limitstudy, steady, twolobe
from .errors import (BandError, NegativeState, NoBracket, NoConvergence, NoThreshold,
                     ParseError, RegimeError, ValidationError)
from .grid import Grid, GridFn, integrate, neumann_eigenpair
from .limits import LimitParams
from .model import ModelParams, constant_state

_POS = "positive"
_NONNEG = "nonnegative"

# key -> (converter, constraint, default); None default means required-if-used
_KNOWN_KEYS = {
    "model.a1": (float, _POS, 5.0),
    "model.a2": (float, _POS, 3.0),
    "model.b1": (float, _POS, 0.1),
    "model.b2": (float, _POS, 1.0),
    "model.c1": (float, _POS, 1.0),
    "model.c2": (float, _POS, 0.1),
    "model.d1": (float, _POS, 1.0),
    "model.d2": (float, _POS, 0.1),
    "model.alpha": (float, _NONNEG, 100.0),
    "model.beta": (float, _NONNEG, 100.0),
    "model.gamma": (float, _POS, 1.0),
    "grid.n_cells": (int, _POS, 256),
    "grid.length": (float, _POS, 1.0),
    "run.seed": (int, _NONNEG, 42),
    "run.tol": (float, _POS, 1e-11),
    "run.eta": (float, _POS, 0.5),
    "run.mode": (int, _POS, 1),
    "run.n": (int, _POS, 1),
    "run.s_max": (float, _POS, 0.1),
    "run.ds": (float, _POS, 0.005),
    "run.alpha0": (float, _POS, 10.0),
    "run.steps": (int, _POS, 4),
    "run.ratio": (float, _POS, 10.0),
    "run.amplitude": (float, _POS, 0.1),
    "run.t_march": (float, _NONNEG, 20.0),
    "run.dt": (float, _POS, 1e-3),
}


def parse_config(text: str) -> dict:
    """Flat `key = value` lines, `#` comments; unknown keys are an error."""
    cfg = {k: v[2] for k, v in _KNOWN_KEYS.items()}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value'", line=lineno)
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KNOWN_KEYS:
            raise ValidationError(f"line {lineno}: unknown key {key!r}", key=key)
        conv, constraint, _ = _KNOWN_KEYS[key]
        try:
            value = conv(val)
        except ValueError:
            raise ParseError(f"line {lineno}: cannot parse {val!r} for {key}",
                             line=lineno) from None
        if constraint == _POS and not value > 0:
            raise ValidationError(f"{key} must be positive, got {value}", key=key)
        if constraint == _NONNEG and value < 0:
            raise ValidationError(f"{key} must be nonnegative, got {value}", key=key)
        cfg[key] = value
    return cfg


def _apply_overrides(cfg: dict, args) -> dict:
    pairs = [("alpha", "model.alpha"), ("beta", "model.beta"),
             ("gamma", "model.gamma"), ("grid", "grid.n_cells"),
             ("seed", "run.seed"), ("eta", "run.eta"),
             ("mode", "run.mode"), ("n", "run.n")]
    for attr, key in pairs:
        v = getattr(args, attr, None)
        if v is not None:
            conv, constraint, _ = _KNOWN_KEYS[key]
            v = conv(v)
            if constraint == _POS and not v > 0:
                raise ValidationError(f"{key} must be positive, got {v}", key=key)
            if constraint == _NONNEG and v < 0:
                raise ValidationError(f"{key} must be nonnegative, got {v}", key=key)
            cfg[key] = v
    return cfg


def _model(cfg: dict) -> ModelParams:
    return ModelParams(a1=cfg["model.a1"], a2=cfg["model.a2"],
                       b1=cfg["model.b1"], b2=cfg["model.b2"],
                       c1=cfg["model.c1"], c2=cfg["model.c2"],
                       d1=cfg["model.d1"], d2=cfg["model.d2"],
                       alpha=cfg["model.alpha"], beta=cfg["model.beta"])


def _limit_params(cfg: dict) -> LimitParams:
    return LimitParams(a1=cfg["model.a1"], a2=cfg["model.a2"],
                       b1=cfg["model.b1"], b2=cfg["model.b2"],
                       c1=cfg["model.c1"], c2=cfg["model.c2"],
                       d1=cfg["model.d1"], d2=cfg["model.d2"],
                       gamma=cfg["model.gamma"])


def _grid(cfg: dict) -> Grid:
    return Grid(n_cells=cfg["grid.n_cells"], length=cfg["grid.length"])


def _seeded_fields(p: ModelParams, g: Grid, seed: int, amplitude: float):
    """Constant coexistence state plus a seeded low-mode cosine perturbation."""
    cs = constant_state(p)
    rng = np.random.default_rng(seed)
    x = g.x / g.length
    pert_u = np.zeros(g.n_cells)
    pert_v = np.zeros(g.n_cells)
    for k in range(1, 5):
        pert_u += rng.uniform(-1, 1) / k * np.cos(k * math.pi * x)
        pert_v += rng.uniform(-1, 1) / k * np.cos(k * math.pi * x)
    u = np.maximum(cs.u_star * (1.0 + amplitude * pert_u), 1e-8)
    v = np.maximum(cs.v_star * (1.0 + amplitude * pert_v), 1e-8)
    return GridFn(g, u), GridFn(g, v)


def _outdir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _cmd_solve(cfg, args) -> int:
    p = _model(cfg)
    g = _grid(cfg)
    u0, v0 = _seeded_fields(p, g, cfg["run.seed"], cfg["run.amplitude"])
    state = steady.march_then_newton(p, u0, v0, dt=cfg["run.dt"],
                                     t_end=cfg["run.t_march"], tol=cfg["run.tol"])
    out = _outdir(args)
    io.write_csv(os.path.join(out, "state.csv"),
                 {"x": g.x, "u": state.u.values, "v": state.v.values},
                 "solve", cfg,
                 metadata={"residual_inf": state.residual_inf,
                           "newton_iters": state.newton_iters,
                           "u_max": state.u_max, "v_max": state.v_max,
                           "certificate_ok": state.certificate_ok})
    return 0


def _cmd_bounds(cfg, args) -> int:
    p = _model(cfg)
    cert = bounds.sup_bound(p, cfg["run.eta"])
    out = _outdir(args)
    io.write_metadata(os.path.join(out, "bounds.txt"), "bounds", cfg,
                      {"eta": cert.eta, "alpha": cert.alpha, "beta": cert.beta,
                       "kind": cert.kind, "u_bound": cert.u_bound,
                       "v_bound": cert.v_bound, "u_shape": cert.u_shape,
                       "v_shape": cert.v_shape})
    return 0


def _cmd_limit_study(cfg, args) -> int:
    base = _model(cfg)
    g = _grid(cfg)
    gamma = cfg["model.gamma"]
    schedule = limitstudy.geometric_schedule(cfg["run.alpha0"], gamma,
                                             cfg["run.steps"], cfg["run.ratio"])
    a0, b0 = schedule[0]
    p0 = base.with_rates(a0, b0)
    u0, v0 = _seeded_fields(p0, g, cfg["run.seed"], cfg["run.amplitude"])
    # seed with a direct Newton polish of the patterned fields; marching
    # first would hand the schedule whatever attractor the dynamics picks,
    # which at strong competition is an exclusion state
    try:
        seed_state = steady.newton_solve(p0, u0, v0, tol=cfg["run.tol"])
    except (NoConvergence, NegativeState):
        seed_state = steady.march_then_newton(p0, u0, v0, dt=cfg["run.dt"],
                                              t_end=cfg["run.t_march"],
                                              tol=cfg["run.tol"])
    report = limitstudy.run_sequence(base, schedule, seed_state,
                                     gamma_target=gamma,
                                     newton_tol=cfg["run.tol"])
    meta = {"classification": report.classification,
            "gamma_target": report.gamma_target,
            "tau_star": report.tau_star,
            "complete_tol": report.complete_tol}
    if report.classification != "Undetermined":
        meta["limit_comparison"] = limitstudy.match_limit(report)
    out = _outdir(args)
    io.write_csv(os.path.join(out, "limit_study.csv"),
                 {"alpha": [r.alpha for r in report.steps],
                  "beta": [r.beta for r in report.steps],
                  "gamma": [r.gamma for r in report.steps],
                  "tau_hat": [r.tau_hat for r in report.steps],
                  "uv_defect": [r.uv_defect for r in report.steps],
                  "w_drift": [r.w_drift for r in report.steps],
                  "residual_inf": [r.residual_inf for r in report.steps]},
                 "limit-study", cfg, metadata=meta)
    return 0


def _cmd_is_solve(cfg, args) -> int:
    lp = _limit_params(cfg)
    g = _grid(cfg)
    cs = constant_state(lp)
    w0c = bifurcation.w_star(lp, lp.d1)
    _, phi = neumann_eigenpair(g, cfg["run.mode"])
    w0 = GridFn(g, w0c + cfg["run.amplitude"] * phi.values)
    sol = limits.is_newton(lp, w0, cs.tau_star, tol=cfg["run.tol"])
    u, v = sol.densities(lp)
    out = _outdir(args)
    io.write_csv(os.path.join(out, "is_state.csv"),
                 {"x": g.x, "w": sol.w.values, "u": u.values, "v": v.values},
                 "is-solve", cfg,
                 metadata={"tau": sol.tau, "residual_inf": sol.residual_inf,
                           "constraint": sol.constraint})
    return 0


def _cmd_cs_solve(cfg, args) -> int:
    lp = _limit_params(cfg)
    g = _grid(cfg)
    n = cfg["run.n"]
    lobe = twolobe.solve_unit(lp, n)
    start = twolobe.assemble(lobe, lp, "fg", g)
    sol = limits.cs_solve(lp, start.w, tol=cfg["run.tol"])
    u, v = sol.densities(lp)
    out = _outdir(args)
    io.write_csv(os.path.join(out, "cs_state.csv"),
                 {"x": g.x, "w": sol.w.values, "u": u.values, "v": v.values},
                 "cs-solve", cfg,
                 metadata={"residual_inf": sol.residual_inf, "n": n})
    return 0


def _cmd_bifurcate(cfg, args) -> int:
    lp = _limit_params(cfg)
    g = _grid(cfg)
    j = cfg["run.mode"]
    d1c = bifurcation.delta_j(lp, j, g.length)
    bp = bifurcation.detect_crossing(lp, j, g, (0.5 * d1c, 2.0 * d1c))
    branch = bifurcation.switch_and_continue(lp, bp, s_max=cfg["run.s_max"],
                                             ds=cfg["run.ds"], g=g,
                                             tol=cfg["run.tol"])
    out = _outdir(args)
    io.write_csv(os.path.join(out, "branch.csv"),
                 {"s": [pt.s for pt in branch.points],
                  "d1": [pt.d1 for pt in branch.points],
                  "tau": [pt.tau for pt in branch.points],
                  "w_min": [float(np.min(pt.w.values)) for pt in branch.points],
                  "w_max": [float(np.max(pt.w.values)) for pt in branch.points],
                  "arclength": [pt.arclength for pt in branch.points]},
                 "bifurcate", cfg,
                 metadata={"mode": j, "delta_j_closed": d1c,
                           "delta_j_discrete": bp.delta_j,
                           "lambda_j_discrete": bp.lambda_j,
                           "truncated": branch.truncated})
    return 0


def _cmd_dhmp(cfg, args) -> int:
    lp = _limit_params(cfg)
    g = _grid(cfg)
    n = cfg["run.n"]
    if not twolobe.existence_check(lp, n):
        raise NoBracket(
            f"no {n}-node solution exists: sqrt(d1/a1) + sqrt(d2/a2) >= 2/({n}*pi)")
    lobe = twolobe.solve_unit(lp, n)
    out = _outdir(args)
    for variant in ("fg", "gf"):
        sol = twolobe.assemble(lobe, lp, variant, g)
        u = np.maximum(sol.w.values, 0.0) / lp.d1
        v = np.maximum(-sol.w.values, 0.0) / (lp.gamma * lp.d2)
        io.write_csv(os.path.join(out, f"dhmp_{variant}.csv"),
                     {"x": g.x, "w": sol.w.values, "u": u, "v": v},
                     "dhmp", cfg,
                     metadata={"n": n, "variant": variant,
                               "theta_n": lobe.theta, "flux": lobe.flux,
                               "zero_count": sol.zero_count,
                               "cs_residual": sol.cs_residual})
    return 0


def _cmd_selftest(cfg, args) -> int:
    g = Grid(64)
    lam, phi = neumann_eigenpair(g, 3)
    from .grid import neumann_laplacian
    eig_err = float(np.max(np.abs(neumann_laplacian(phi).values + lam * phi.values)))
    assert eig_err < 1e-10 * lam, "discrete eigenpair identity failed"
    assert abs(integrate(phi)) < 1e-12, "eigenfunction quadrature failed"

    p = _model(cfg)
    cs = constant_state(p)
    u0 = GridFn.constant(g, cs.u_star)
    v0 = GridFn.constant(g, cs.v_star)
    r1, r2 = steady.residual_skt(p, u0, v0)
    res = max(float(np.max(np.abs(r1.values))), float(np.max(np.abs(r2.values))))
    assert res < 1e-9, "constant state is not a discrete solution"

    lp = _limit_params(cfg)
    w, tau = np.full(g.n_cells, bifurcation.w_star(lp, lp.d1)), cs.tau_star
    u, v = limits.uv_from_w_tau(lp, w, tau)
    prod_err = float(np.max(np.abs(u * v - tau)))
    assert prod_err < 1e-12, "product identity failed"

    out = _outdir(args)
    io.write_csv(os.path.join(out, "selftest.csv"),
                 {"check": ["eigenpair_identity", "eigenfunction_mean",
                            "constant_state_residual", "product_identity"],
                  "value": [eig_err, float(abs(integrate(phi))), res, prod_err]},
                 "selftest", cfg)
    print("selftest: ok")
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "bounds": _cmd_bounds,
    "limit-study": _cmd_limit_study,
    "is-solve": _cmd_is_solve,
    "cs-solve": _cmd_cs_solve,
    "bifurcate": _cmd_bifurcate,
    "dhmp": _cmd_dhmp,
    "selftest": _cmd_selftest,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(3, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="sktlab",
                     description="Stationary cross-diffusion laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="path to key=value config")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--grid", type=int, default=None, help="n_cells override")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--beta", type=float, default=None)
        sp.add_argument("--gamma", type=float, default=None)
        sp.add_argument("--eta", type=float, default=None)
        sp.add_argument("--mode", type=int, default=None)
        sp.add_argument("--n", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config is not None:
            with open(args.config, encoding="utf-8") as fh:
                cfg = parse_config(fh.read())
        else:
            cfg = parse_config("")
        cfg = _apply_overrides(cfg, args)
        return _COMMANDS[args.command](cfg, args)
    except (ParseError, ValidationError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except (RegimeError, NoThreshold, NoBracket, BandError) as exc:
        print(f"not applicable: {exc}", file=sys.stderr)
        return 4
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
