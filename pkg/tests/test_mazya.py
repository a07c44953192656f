import math

import numpy as np
import pytest

from hardy_sobolev import potentials as P
from hardy_sobolev.grid import GridDomain, GridFunction, sample_potential
from hardy_sobolev.lorentz import bounded_ball_constant
from hardy_sobolev.mazya import (ATTAINED_SUFFICIENT, COMPACT, INCONCLUSIVE, NO_POSITIVE_MASS, NOT_COMPACT,
                                 CapacityCache, SetFamily, ball_ratio, compactness_verdict,
                                 concentration_function, hardy_constant, hardy_sandwich, mazya_lower_bound,
                                 perturbation_threshold, pi_consistency, positive_part_criterion, singular_set)

FAR = GridDomain.node_aligned([-2.0] * 3, [2.0] * 3, 16, exterior="far_field")


def test_hardy_constant():
    assert hardy_constant(2.0) == 4.0
    assert hardy_constant(3.0) == pytest.approx(27 / 4)


def test_sandwich_and_threshold():
    s = hardy_sandwich(1.0, 2.5, 2.0)
    assert s.consistent and s.upper == 4.0 and s.slack == 0.0
    assert not hardy_sandwich(3.0, 2.5, 2.0).consistent
    assert hardy_sandwich(0.5, 4.0, 2.0).slack == pytest.approx(0.5)
    assert perturbation_threshold(1.0, 14.0, 2.0) == 0.5
    with pytest.raises(ValueError):
        perturbation_threshold(1.0, 0.0, 2.0)


def test_ball_ratio_of_constant_near_bounded_formula():
    # g = 1: |B_r| / Cap(B_r) = r^2 / 3 in R^3
    r = 0.5
    val = ball_ratio(P.constant(1.0), 2.0, [0.0] * 3, r, domain=FAR, cells_per_radius=6)
    assert val.ratio == pytest.approx(r ** 2 * bounded_ball_constant(3, 2.0), rel=0.1)


def test_lower_bound_is_monotone_in_family():
    cache = CapacityCache(2.0)
    small = mazya_lower_bound(P.bump(1.0), 2.0, SetFamily(centers=[[0, 0, 0]], radii=(0.5,), quantiles=()),
                              domain=FAR, cache=cache)
    big = mazya_lower_bound(P.bump(1.0), 2.0, SetFamily(centers=[[0, 0, 0]], radii=(0.5, 1.0), quantiles=(0.5,)),
                            domain=FAR, cache=cache)
    assert big.lower >= small.lower
    with pytest.raises(ValueError):
        mazya_lower_bound(P.bump(1.0), 2.0, SetFamily(centers=[], radii=(), quantiles=()), domain=FAR)


def test_concentration_map_shapes_and_grid_input():
    dom = GridDomain.node_aligned([-1.0] * 3, [1.0] * 3, 32, exterior="far_field")
    g = sample_potential(P.bump(1.0), dom)
    cmap = concentration_function(g, 2.0, centers=[[0, 0, 0], [0.5, 0, 0]], radii=(0.5, 0.25),
                                  include_infinity=False)
    assert len(cmap.values) == 2 and len(cmap.radii) == 2
    assert len(cmap.rows()) == 4
    with pytest.raises(ValueError):
        # radii below 4h are dropped, leaving too few
        concentration_function(g, 2.0, centers=[[0, 0, 0]], radii=(0.5, 0.05))
    assert all(v[0] >= v[-1] for v in cmap.values)
    assert singular_set(cmap) == []


def test_bounded_domain_has_no_infinity():
    dom = GridDomain.node_aligned([0.0] * 3, [1.0] * 3, 12)
    cmap = concentration_function(P.constant(1.0), 2.0, domain=dom, lattice=1)
    assert cmap.infinity_values == [] and "bounded" in cmap.infinity_note
    assert compactness_verdict(P.constant(1.0), 2.0, cmap=cmap).verdict == COMPACT


def test_positive_part_criterion():
    dom = GridDomain.node_aligned([-1.0] * 3, [1.0] * 3, 12, exterior="far_field")
    neg = GridFunction(dom, -np.ones(dom.cells))
    assert positive_part_criterion(neg, 2.0).verdict == NO_POSITIVE_MASS
    mixed = P.combine((1.0, P.bump(0.4)), (-0.01, P.inverse_power(2.0, center=[0.5, 0.5, 0.5])))
    v = positive_part_criterion(mixed, 2.0, domain=dom, lattice=1)
    assert v.verdict == ATTAINED_SUFFICIENT


def test_pi_ordering():
    cmp_ = pi_consistency(P.inverse_power(2.0), 2.0, [0.0] * 3, 0.25, domain=FAR)
    assert cmp_.pi_r <= cmp_.c_r * (1 + 1e-12) <= cmp_.pi_2r * (1 + 1e-12)
