import math

import numpy as np
import pytest

from sktlab.errors import NoBracket
from sktlab.grid import Grid
from sktlab.limits import LimitParams
from sktlab.twolobe import (assemble, existence_check, solve_unit, validate)

from conftest import P1

# symmetric small-diffusion set: both lobes obey the same scalar problem
SYM = LimitParams(a1=1.0, a2=1.0, b1=1.0, b2=1.0, c1=1.0, c2=1.0,
                  d1=0.01, d2=0.01, gamma=1.0)


def test_existence_threshold_exact():
    # sqrt(d1/a1) + sqrt(d2/a2) = 0.2 against 2/(n pi)
    assert [n for n in range(1, 7) if existence_check(SYM, n)] == [1, 2, 3]
    # boundary sanity on an asymmetric set
    lp = LimitParams(gamma=1.0, **P1)   # 0.6301 < 2/pi = 0.6366
    assert existence_check(lp, 1)
    assert not existence_check(lp, 2)


def test_symmetric_interface_at_midpoint():
    lobe = solve_unit(SYM, 1)
    assert abs(lobe.theta - 0.5) < 1e-8
    assert lobe.mismatch < 1e-8
    # matched fluxes are equal and opposite and strictly nonzero
    assert lobe.flux_u < 0.0 < lobe.flux_v
    assert abs(lobe.flux_u + lobe.flux_v) < 1e-10 * abs(lobe.flux_u)


def test_multinode_interfaces_scale():
    for n in (2, 3):
        lobe = solve_unit(SYM, n)
        assert abs(lobe.theta - 0.5 / n) < 1e-8
        assert lobe.mismatch < 1e-8


def test_assembled_zero_counts():
    g = Grid(256)
    for n in (1, 2, 3):
        lobe = solve_unit(SYM, n)
        for variant in ("fg", "gf"):
            sol = assemble(lobe, SYM, variant, g)
            assert sol.zero_count == n


def test_variants_are_mirror_images():
    g = Grid(256)
    lobe = solve_unit(SYM, 1)
    fg = assemble(lobe, SYM, "fg", g)
    gf = assemble(lobe, SYM, "gf", g)
    assert fg.w.values[0] > 0.0 > gf.w.values[0]
    # in the symmetric case the gf profile is the reflection (equivalently
    # the negation) of fg
    assert np.max(np.abs(gf.w.values - fg.w.values[::-1])) < 1e-12
    assert np.max(np.abs(gf.w.values + fg.w.values)) < 1e-12


def test_cs_residual_quarters_under_refinement():
    lobe = solve_unit(SYM, 1)
    res = {}
    for n_cells in (128, 256, 512):
        sol = assemble(lobe, SYM, "fg", Grid(n_cells))
        zeros, resid, mism = validate(sol, SYM)
        assert zeros == 1
        res[n_cells] = resid
    assert 3.0 < res[128] / res[256] < 5.0
    assert 3.0 < res[256] / res[512] < 5.0


def test_no_bracket_beyond_threshold():
    with pytest.raises(NoBracket):
        solve_unit(SYM, 4)


def test_asymmetric_unit_lobe():
    lp = LimitParams(gamma=1.0, **P1)
    lobe = solve_unit(lp, 1)
    # interface sits away from the midpoint for unequal lobe problems
    assert lobe.theta > 0.6
    assert lobe.mismatch < 1e-8
    sol = assemble(lobe, lp, "fg", Grid(256))
    assert sol.zero_count == 1


def test_invalid_variant():
    lobe = solve_unit(SYM, 1)
    with pytest.raises(ValueError):
        assemble(lobe, SYM, "xy", Grid(128))
