import numpy as np
import pytest

from hardy_sobolev.grid import GridDomain, GridFunction
from hardy_sobolev.io import (mask_path, read_grid_function, read_step_function, write_grid_function,
                              write_step_function)
from hardy_sobolev.rearrange import StepFunction


def test_grid_file_round_trip(tmp_path, rng):
    d = GridDomain.box([-1.0, 0.0, 2.0], [1.0, 1.0, 3.0], [3, 4, 5], exterior="far_field")
    d = d.with_mask(rng.random(d.cells) > 0.3)
    f = GridFunction(d, rng.random(d.cells))
    path, mpath = write_grid_function(tmp_path / "f.grid", f)
    assert mpath == mask_path(path)
    raw = path.read_bytes()
    header, data = raw.split(b"\n", 1)
    assert len(data) == 8 * 60
    # row-major little-endian float64
    assert np.frombuffer(data, "<f8")[1] == f.values[0, 0, 1]
    g = read_grid_function(path)
    assert g.domain == d
    assert np.array_equal(g.values, f.values)


def test_grid_file_errors(tmp_path):
    p = tmp_path / "bad.grid"
    p.write_bytes(b'{"dim": 1, "cells_per_axis": [4], "box_lo": [0], "box_hi": [1]}\n' + b"\0" * 16)
    with pytest.raises(ValueError, match="data bytes"):
        read_grid_function(p)
    p.write_bytes(b"no header")
    with pytest.raises(ValueError):
        read_grid_function(p)


def test_step_file_round_trip(tmp_path):
    s = StepFunction((0.25, 1.0), (2.0, 0.5, 0.0))
    assert read_step_function(write_step_function(tmp_path / "s.csv", s)) == s
