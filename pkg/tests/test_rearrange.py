import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hardy_sobolev.grid import GridDomain, GridFunction
from hardy_sobolev.rearrange import (StepFunction, decreasing_rearrangement, distribution,
                                     equimeasurability_defect, hardy_littlewood_gap, maximal_function,
                                     schwarz_symmetrization)

from conftest import random_function

DOM = GridDomain.box([0.0] * 3, [1.0] * 3, [4, 4, 4])
values = arrays(np.float64, (4, 4, 4), elements=st.floats(0, 10, allow_nan=False, width=32))


def test_step_function_validation():
    with pytest.raises(ValueError):
        StepFunction((1.0,), (1.0, 2.0))  # increasing
    with pytest.raises(ValueError):
        StepFunction((2.0, 1.0), (3.0, 2.0, 0.0))
    with pytest.raises(ValueError):
        StepFunction((1.0,), (1.0,))


def test_rearrangement_of_known_values():
    d = GridDomain.box([0.0], [1.0], [4])
    f = GridFunction(d, [1.0, 3.0, 0.0, 3.0])
    fs = decreasing_rearrangement(f)
    assert fs.breakpoints == (0.5, 0.75)
    assert fs.levels == (3.0, 1.0, 0.0)
    assert maximal_function(fs, [0.25, 0.75, 1.0]).tolist() == pytest.approx([3.0, 7 / 3, 7 / 4])


def test_distribution_counts_strictly_above():
    d = GridDomain.box([0.0], [1.0], [4])
    f = GridFunction(d, [1.0, 3.0, 0.0, 3.0])
    a = distribution(f)
    assert a(0.0) == 0.75
    assert a(1.0) == 0.5
    assert a(2.9) == 0.5
    assert a(3.0) == 0.0


@settings(max_examples=60, deadline=None)
@given(values)
def test_rearrangement_properties(v):
    f = GridFunction(DOM, v)
    fs = decreasing_rearrangement(f)
    # equimeasurable: same distribution function
    a, b = distribution(f), fs.distribution()
    for s in np.unique(np.concatenate([[0.0], v.ravel()])):
        assert a(s) == pytest.approx(float(b(s)), abs=1e-12)
    for p in (1.0, 2.0, 3.5):
        assert fs.power_integral(p) == pytest.approx(float(np.sum(v ** p)) * DOM.cell_volume, rel=1e-10, abs=1e-12)
    t = np.linspace(1e-3, 1.2, 50)
    assert np.all(maximal_function(fs, t) >= fs(t) - 1e-12)


@settings(max_examples=60, deadline=None)
@given(values, values)
def test_hardy_littlewood_gap_nonnegative(u, v):
    gap = hardy_littlewood_gap(GridFunction(DOM, u), GridFunction(DOM, v))
    assert gap >= -1e-9 * max(1.0, float(np.sum(u * v)))


def test_hardy_littlewood_rejects_negative(cube8, rng):
    f = random_function(cube8, rng)
    with pytest.raises(ValueError):
        hardy_littlewood_gap(f, f * -1.0)


def test_schwarz_symmetrization_is_radial_and_equimeasurable(rng):
    src = GridDomain.box([0.0] * 2, [1.0] * 2, [24, 24])
    f = GridFunction(src, np.round(rng.random(src.cells) * 4))
    target = GridDomain.box([-1.0] * 2, [1.0] * 2, [48, 48])
    fs = schwarz_symmetrization(f, target)
    # radial: equal radii get equal values
    r = target.radius(np.zeros(2))
    assert np.all(fs.values[r == r[10, 20]] == fs.values[10, 20])
    # discrete cells only approximate the ball, so the defect is cell sized
    assert equimeasurability_defect(f, fs, [0.5, 1.5, 2.5, 3.5]) < 0.05


def test_schwarz_symmetrization_needs_room(rng):
    f = GridFunction(GridDomain.box([0.0] * 2, [1.0] * 2, [8, 8]), np.ones((8, 8)))
    with pytest.raises(ValueError):
        schwarz_symmetrization(f, GridDomain.box([-0.4] * 2, [0.4] * 2, [8, 8]))


def test_step_csv_round_trip():
    s = StepFunction((0.5, 1.25), (3.0, 1.0, 0.0))
    assert StepFunction.from_csv(s.to_csv()) == s
