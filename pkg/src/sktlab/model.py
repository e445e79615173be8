"""Model coefficients and the closed-form algebraic quantities of the system.

The stationary problem couples two competing densities u, v through
divergence-form diffusion Delta[(d1 + alpha*v) u], Delta[(d2 + beta*u) v]
and Lotka-Volterra kinetics f, g.  This module holds the parameter record,
the reaction terms, the reduced-form reaction terms F and G obtained by
eliminating the cross Laplacians, the constant coexistence state and the
competition-regime classification.  Everything here is exact closed-form
algebra; no grids are involved.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .errors import DegenerateError, RegimeError


class CompetitionRegime(enum.Enum):
    WEAK = "weak"
    STRONG = "strong"
    NEITHER = "neither"


@dataclass(frozen=True)
class ModelParams:
    """All coefficients of the stationary cross-diffusion system.

    a1, a2 : birth rates
    b1, c2 : intra-specific competition
    c1, b2 : inter-specific competition
    d1, d2 : linear diffusion rates
    alpha, beta : cross-diffusion rates (may be zero)
    """

    a1: float
    a2: float
    b1: float
    b2: float
    c1: float
    c2: float
    d1: float
    d2: float
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2", "c1", "c2", "d1", "d2"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.alpha < 0.0 or self.beta < 0.0:
            raise ValueError("alpha and beta must be nonnegative")

    def gamma(self) -> float:
        """Rate ratio alpha/beta; only defined for beta > 0."""
        if self.beta <= 0.0:
            raise ValueError("gamma() undefined at beta = 0")
        return self.alpha / self.beta

    def with_rates(self, alpha: float, beta: float) -> "ModelParams":
        return replace(self, alpha=alpha, beta=beta)

    def swapped(self) -> "ModelParams":
        """Exchange the roles of the two equations (u <-> v).

        Maps a1<->a2, b1<->c2, c1<->b2, d1<->d2 and alpha<->beta, so that
        any estimate derived for u applies verbatim to v of the original
        parameter set.
        """
        return ModelParams(
            a1=self.a2, a2=self.a1,
            b1=self.c2, b2=self.c1,
            c1=self.b2, c2=self.b1,
            d1=self.d2, d2=self.d1,
            alpha=self.beta, beta=self.alpha,
        )


@dataclass(frozen=True)
class ConstantState:
    """The positive constant coexistence state and its density product."""

    u_star: float
    v_star: float
    tau_star: float


def reaction_f(p: ModelParams, u, v):
    """First kinetic term u*(a1 - b1*u - c1*v)."""
    return u * (p.a1 - p.b1 * u - p.c1 * v)


def reaction_g(p: ModelParams, u, v):
    """Second kinetic term v*(a2 - b2*u - c2*v)."""
    return v * (p.a2 - p.b2 * u - p.c2 * v)


def big_F(p: ModelParams, u, v):
    """Reduced-form reaction term of the u equation.

    (d2 + beta*u)(a1 - b1*u - c1*v) - alpha*v*(a2 - b2*u - c2*v).
    Its sign at the maximum point of u drives the a priori bound.
    """
    return (p.d2 + p.beta * u) * (p.a1 - p.b1 * u - p.c1 * v) \
        - p.alpha * v * (p.a2 - p.b2 * u - p.c2 * v)


def big_G(p: ModelParams, u, v):
    """Reduced-form reaction term of the v equation (mirror of big_F)."""
    return -p.beta * u * (p.a1 - p.b1 * u - p.c1 * v) \
        + (p.d1 + p.alpha * v) * (p.a2 - p.b2 * u - p.c2 * v)


def regime(p: ModelParams) -> CompetitionRegime:
    """Classify the competition regime by the ratio chains.

    weak:   c1/c2 < a1/a2 < b1/b2
    strong: b1/b2 < a1/a2 < c1/c2
    Comparisons are done by cross-multiplication so rational inputs never
    produce spurious ties.  Ties map to NEITHER.
    """
    ab = p.a1 * p.b2 - p.a2 * p.b1   # sign of a1/a2 - b1/b2
    ac = p.a1 * p.c2 - p.a2 * p.c1   # sign of a1/a2 - c1/c2
    if ac > 0.0 and ab < 0.0:
        return CompetitionRegime.WEAK
    if ab > 0.0 and ac < 0.0:
        return CompetitionRegime.STRONG
    return CompetitionRegime.NEITHER


def constant_state(p: ModelParams) -> ConstantState:
    """Positive root of both kinetic nullclines, with tau* = u* v*.

    Only defined in the weak or strong competition regime.
    """
    reg = regime(p)
    if reg is CompetitionRegime.NEITHER:
        raise RegimeError("constant coexistence state requires weak or strong competition")
    den = p.b2 * p.c1 - p.b1 * p.c2
    if abs(den) < 1e-14 * max(abs(p.b2 * p.c1), abs(p.b1 * p.c2)):
        raise DegenerateError("b2*c1 - b1*c2 vanishes; nullclines are parallel")
    u_star = (p.a2 * p.c1 - p.a1 * p.c2) / den
    v_star = (p.a1 * p.b2 - p.a2 * p.b1) / den
    return ConstantState(u_star=u_star, v_star=v_star, tau_star=u_star * v_star)


def sigma_affine(p: ModelParams, u, v):
    """Affine combination d2*a1 + d1*a2 - (d2*b1 + d1*b2)*u - (d2*c1 + d1*c2)*v.

    Identically equals big_F + big_G for every (u, v, alpha, beta); the
    region where it is negative is where F >= 0 forces G < 0.
    """
    return (p.d2 * p.a1 + p.d1 * p.a2
            - (p.d2 * p.b1 + p.d1 * p.b2) * u
            - (p.d2 * p.c1 + p.d1 * p.c2) * v)
