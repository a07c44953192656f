import math

import numpy as np
import pytest

from hardy_sobolev import potentials as P
from hardy_sobolev.lorentz import (LorentzIndex, PowerProfile, bounded_ball_constant, embedding_constant,
                                   lorentz_norm, lorentz_quasinorm, radial_I_norm,
                                   symmetric_hardy_weight_norms)
from hardy_sobolev.rearrange import StepFunction


def test_index_validation():
    with pytest.raises(ValueError):
        LorentzIndex(1.0)
    with pytest.raises(ValueError):
        LorentzIndex(2.0, 0.5)


@pytest.mark.parametrize("P_,Q", [(1.5, 1.0), (2.0, 2.0), (3.0, 1.5), (1.5, 4.0)])
def test_quasi_norm_not_above_norm(P_, Q, rng):
    idx = LorentzIndex(P_, Q)
    for _ in range(20):
        lev = np.sort(rng.random(6))[::-1]
        bps = np.cumsum(rng.random(5) + 0.1)
        f = StepFunction(tuple(bps), tuple(lev[:-1]) + (0.0,))
        q, n = lorentz_quasinorm(f, idx), lorentz_norm(f, idx)
        assert q <= n * (1 + 1e-12)
        assert n <= P_ / (P_ - 1) * q * (1 + 1e-9)


def test_weak_norm_of_step_is_checked_at_ends():
    f = StepFunction((1.0, 4.0), (2.0, 1.0, 0.0))
    # f* t^(1/2): 2*1, 1*2
    assert lorentz_quasinorm(f, LorentzIndex(2.0)) == pytest.approx(2.0)


def test_power_profile_membership():
    idx = LorentzIndex(1.5)
    assert lorentz_quasinorm(PowerProfile(1.0, 2 / 3), idx) == pytest.approx(1.0)
    assert math.isinf(lorentz_quasinorm(PowerProfile(1.0, 0.8), idx))
    assert math.isinf(lorentz_norm(PowerProfile(1.0, 2 / 3), LorentzIndex(1.5, 2.0)))


def test_I_norm_cases():
    assert radial_I_norm(P.indicator(1.0), 2.0) == pytest.approx(0.5)
    assert radial_I_norm(([0.0, 1.0, 2.0], [2.0, 1.0]), 2.0) == pytest.approx(1.0 + 1.5)
    assert math.isinf(radial_I_norm(P.inverse_power(2.0), 2.0))
    assert math.isinf(radial_I_norm(P.constant(1.0), 2.0))
    bumpn = radial_I_norm(P.bump(1.0), 2.0)
    assert 0 < bumpn < 0.5
    with pytest.raises(TypeError):
        radial_I_norm("nope", 2.0)


def test_constants_relations():
    N, p = 3, 2.0
    assert bounded_ball_constant(N, p) == pytest.approx(1 / 3)
    vals = symmetric_hardy_weight_norms(N, p)
    assert vals["stated"] == pytest.approx(1 / 3)
    assert vals["ball_family"] == pytest.approx(vals["embedding_bound"], rel=1e-12)
    assert embedding_constant(N, p) * 3 == pytest.approx(vals["ball_family"])
