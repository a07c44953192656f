import math

import numpy as np
import pytest

from hardy_sobolev.capacity import (CapacityProblem, PropertyCase, capacity, capacity_ball_analytic,
                                    check_capacity_properties, localized_capacity_comparison)
from hardy_sobolev.grid import CompactSet, GridDomain


def test_analytic_ball_capacity():
    assert capacity_ball_analytic(3, 2.0, 0.5) == pytest.approx(2 * math.pi)
    # N=3, p=1.5: 3 w_3 (1.5/0.5)^0.5 r^1.5
    assert capacity_ball_analytic(3, 1.5, 1.0) == pytest.approx(4 * math.pi * math.sqrt(3))


def test_problem_validation():
    d = GridDomain.box([-1.0] * 3, [1.0] * 3, [8] * 3)
    F = CompactSet.ball(d, 0.3)
    with pytest.raises(ValueError):
        CapacityProblem(d, F, 3.0)
    with pytest.raises(ValueError):
        CapacityProblem(GridDomain.box([-1.0] * 3, [1.0] * 3, [6] * 3), F, 2.0)


def test_dirichlet_ball_against_annulus_formula():
    # Cap(B_r, B_R) = 4 pi / (1/r - 1/R) in R^3, p = 2
    R, r = 1.0, 0.4
    exact = 4 * math.pi / (1 / r - 1 / R)
    errs = []
    for n in (12, 24):
        d = GridDomain.node_aligned([-R] * 3, [R] * 3, n, region=lambda x: np.linalg.norm(x, axis=-1) < R)
        res = capacity(CapacityProblem(d, CompactSet.ball(d, r), 2.0))
        assert res.converged
        errs.append(abs(res.value / exact - 1))
    # first order in h: the staircase boundary costs a few percent per cell
    assert errs[1] < 0.7 * errs[0]
    assert errs[1] < 0.15


def test_p_not_two_far_field():
    d = GridDomain.box([-2.0] * 3, [2.0] * 3, [24] * 3, exterior="far_field")
    res = capacity(CapacityProblem(d, CompactSet.ball(d, 0.5), 1.5))
    assert res.value == pytest.approx(capacity_ball_analytic(3, 1.5, 0.5), rel=0.15)
    # energies never increase along the descent
    assert all(b <= a * (1 + 1e-12) for a, b in zip(res.energies, res.energies[1:]))


def test_properties_suite_and_localization():
    d = GridDomain.box([-1.0] * 3, [1.0] * 3, [16] * 3, exterior="far_field")
    small, big = CompactSet.ball(d, 0.25), CompactSet.ball(d, 0.5)
    inner = GridDomain(d.box_lo, d.box_hi, d.cells, d.radius() < 0.9, "dirichlet")
    pa, pb = CapacityProblem(d, small, 2.0), CapacityProblem(d, big, 2.0)
    rep = check_capacity_properties([
        PropertyCase("monotone_set", (pa, pb)),
        PropertyCase("monotone_domain", (CapacityProblem(inner, CompactSet(inner, small.member), 2.0), pa)),
    ])
    assert rep.all_passed
    assert rep.isoperimetric_constant > 0
    loc = localized_capacity_comparison(CompactSet.ball(d, 0.2), [0.0] * 3, 0.3, 2.0)
    # restricting Omega to B_2r can only raise the capacity
    assert loc.lhs >= loc.rhs * (1 - 1e-6)
