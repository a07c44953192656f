import numpy as np
import pytest

from hardy_sobolev import potentials as P
from hardy_sobolev.potentials import PotentialSpec, UnsupportedPotential


def test_gallery_round_trip():
    for spec in (P.constant(2.0), P.inverse_power(2.0, center=[0.5, 0, 0]), P.cylindrical(3, 2.0),
                 P.bump(0.5), P.indicator(2.0, 1.0), P.annulus_singular(0.5),
                 P.combine((1.0, P.inverse_power(2.0)), (3.0, P.bump(0.5, center=[1, 0, 0])))):
        assert PotentialSpec.from_json(spec.to_json()).to_dict() == spec.to_dict()


def test_unknown_kind_rejected():
    with pytest.raises(UnsupportedPotential):
        P.gallery("nope")
    with pytest.raises((UnsupportedPotential, ValueError)):
        PotentialSpec.from_dict({"kind": "mystery", "params": {}})


def test_validity_ranges():
    with pytest.raises(UnsupportedPotential):
        P.cylindrical(2, 2.0).validate(3, 2.0)  # needs p < k
    P.cylindrical(3, 2.0).validate(4, 2.0)
    with pytest.raises(UnsupportedPotential):
        P.inverse_power(3.0).validate(3, 2.0)
    with pytest.raises(UnsupportedPotential):
        P.annulus_singular(1.0).validate(3, 2.0)


def test_singularities_travel_with_spec():
    s = P.combine((1.0, P.inverse_power(2.0, center=[1, 0, 0])), (1.0, P.cylindrical(3, 2.0)))
    types = sorted(d["type"] for d in s.singularities())
    assert types == ["axis", "point"]


def test_evaluate():
    x = np.array([[0.0, 0.0, 2.0], [0.0, 0.0, 0.0]])
    v = P.inverse_power(2.0).evaluate(x)
    assert v[0] == pytest.approx(0.25) and np.isinf(v[1])
    assert P.indicator(1.0).evaluate(x).tolist() == [0.0, 1.0]
