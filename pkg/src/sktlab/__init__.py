"""Numerical laboratory for a stationary cross-diffusion competition system
on a one-dimensional interval with zero-flux boundary.

Subpackages cover the full-system steady solver, the a priori sup-norm
certificate, the simultaneous large-rate limit with its two limiting
systems, local bifurcation of the incomplete-segregation branch, and the
explicit construction of sign-changing complete-segregation solutions.
"""

from .errors import (AssemblyError, BandError, BlowUp, BracketError,
                     DegenerateError, DomainError, NegativeState, NoBracket,
                     NoConvergence, NoThreshold, ParseError, RegimeError,
                     SktlabError, TauCollapse, ValidationError)
from .grid import Grid, GridFn
from .limits import CSState, ISState, LimitParams
from .model import CompetitionRegime, ConstantState, ModelParams

__version__ = "0.1.0"

__all__ = [
    "AssemblyError", "BandError", "BlowUp", "BracketError",
    "CompetitionRegime", "ConstantState", "CSState", "DegenerateError",
    "DomainError", "Grid", "GridFn", "ISState", "LimitParams", "ModelParams",
    "NegativeState", "NoBracket", "NoConvergence", "NoThreshold",
    "ParseError", "RegimeError", "SktlabError", "TauCollapse",
    "ValidationError", "__version__",
]
