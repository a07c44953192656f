"""Grid-function files.

A grid function is stored as two files: ``<name>`` holds one JSON header line
followed by the cell values as raw little-endian float64 in row-major order,
and ``<name>.mask`` holds one byte (0 or 1) per cell in the same order.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .grid import GridDomain, GridFunction
from .rearrange import StepFunction

MASK_SUFFIX = ".mask"


def mask_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + MASK_SUFFIX)


def write_grid_function(path, f: GridFunction) -> tuple[Path, Path]:
    path = Path(path)
    dom = f.domain
    header = dom.header()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C"))
    mp = mask_path(path)
    mp.write_bytes(np.ascontiguousarray(dom.mask, dtype=np.uint8).tobytes(order="C"))
    return path, mp


def read_grid_function(path) -> GridFunction:
    path = Path(path)
    raw = path.read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ValueError(f"{path}: missing header line")
    try:
        header = json.loads(raw[:nl])
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: bad header: {exc}") from None
    for key in ("dim", "cells_per_axis", "box_lo", "box_hi"):
        if key not in header:
            raise ValueError(f"{path}: header lacks {key!r}")
    cells = tuple(int(c) for c in header["cells_per_axis"])
    if len(cells) != header["dim"]:
        raise ValueError(f"{path}: dim does not match cells_per_axis")
    n = math.prod(cells)
    data = raw[nl + 1:]
    if len(data) != 8 * n:
        raise ValueError(f"{path}: expected {8 * n} data bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f8").reshape(cells)
    mp = mask_path(path)
    if mp.exists():
        mb = mp.read_bytes()
        if len(mb) != n:
            raise ValueError(f"{mp}: expected {n} mask bytes, found {len(mb)}")
        mask = np.frombuffer(mb, dtype=np.uint8).reshape(cells).astype(bool)
    else:
        mask = np.ones(cells, dtype=bool)
    dom = GridDomain(tuple(header["box_lo"]), tuple(header["box_hi"]), cells, mask,
                     header.get("exterior", "dirichlet"))
    return GridFunction(dom, values)


def write_step_function(path, f: StepFunction) -> Path:
    path = Path(path)
    path.write_text(f.to_csv())
    return path


def read_step_function(path) -> StepFunction:
    return StepFunction.from_csv(Path(path).read_text())
