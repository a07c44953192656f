"""Distribution functions, decreasing rearrangements and Schwarz
symmetrization of grid functions.

Everything is exact on the discrete level: a grid function is a finite list of
values, each occupying one cell of measure ``h^N``, so ``f*`` is a sort.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .grid import GridDomain, GridFunction, _check_same
from .potentials import sphere_volume


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous nonincreasing step function on ``(0, inf)``.

    Takes ``levels[i]`` on ``[breakpoints[i-1], breakpoints[i])`` with an
    implicit leading breakpoint ``0``; the last level holds on
    ``[breakpoints[-1], inf)``.
    """

    breakpoints: tuple[float, ...]
    levels: tuple[float, ...]

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.levels, dtype=float)
        if v.size != b.size + 1:
            raise ValueError("need len(levels) == len(breakpoints) + 1")
        if b.size and (b[0] <= 0 or np.any(np.diff(b) <= 0)):
            raise ValueError("breakpoints must be positive and strictly increasing")
        if np.any(np.diff(v) > 0):
            raise ValueError("levels must be nonincreasing")
        if v[-1] < 0 or not np.all(np.isfinite(v)):
            raise ValueError("levels must be finite and nonnegative")
        object.__setattr__(self, "breakpoints", tuple(float(x) for x in b))
        object.__setattr__(self, "levels", tuple(float(x) for x in v))

    @classmethod
    def from_sorted(cls, values, cell_measure: float) -> "StepFunction":
        """Step function taking ``values[j]`` (descending) on
        ``[j*cell_measure, (j+1)*cell_measure)`` and zero afterwards."""
        v = np.asarray(values, dtype=float)
        if v.size == 0 or v[0] == 0:
            return cls((), (0.0,))
        # a new step starts wherever the value changes
        change = np.flatnonzero(np.diff(v) != 0) + 1
        counts = np.append(change, v.size)
        levels = list(v[np.append(0, change)])
        bps = [int(c) * cell_measure for c in counts]
        if levels[-1] == 0:
            levels.pop()
            bps.pop()
        return cls(tuple(bps), tuple(levels) + (0.0,))

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate([[0.0], self.breakpoints])

    def segments(self):
        """Yields ``(a, b, level)`` with ``b = inf`` for the last segment."""
        ends = list(self.breakpoints) + [math.inf]
        a = 0.0
        for b, v in zip(ends, self.levels):
            yield a, b, v
            a = b

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(np.asarray(self.breakpoints), t, side="right")
        return np.asarray(self.levels)[idx]

    @property
    def support_measure(self) -> float:
        if self.levels[-1] > 0:
            return math.inf
        nz = [b for b, v in zip(self.breakpoints, self.levels) if v > 0]
        return nz[-1] if nz else 0.0

    def scaled(self, c: float) -> "StepFunction":
        if c < 0:
            raise ValueError("scale must be nonnegative")
        return StepFunction(self.breakpoints, tuple(c * v for v in self.levels))

    def power_integral(self, p: float) -> float:
        """``int_0^inf f(t)^p dt``."""
        if self.levels[-1] > 0:
            return math.inf
        return float(sum((b - a) * v ** p for a, b, v in self.segments() if v > 0))

    def distribution(self) -> "StepFunction":
        """``|{t : f(t) > s}|`` as a step function of ``s``."""
        if self.levels[-1] > 0:
            raise ValueError("distribution of a step function with infinite support")
        pos = [(b, v) for (_, b, v) in self.segments() if v > 0]
        if not pos:
            return StepFunction((), (0.0,))
        # for s in [v_{j+1}, v_j) the set {f > s} is [0, b_j)
        bps = tuple(v for _, v in reversed(pos))
        levels = tuple(b for b, _ in reversed(pos)) + (0.0,)
        return StepFunction(bps, levels)

    def running_integral(self) -> np.ndarray:
        """``int_0^{t_i} f`` at every segment start ``t_i``."""
        starts = self.starts
        v = np.asarray(self.levels)
        widths = np.diff(starts)
        return np.concatenate([[0.0], np.cumsum(widths * v[:-1])])

    def maximal_pieces(self):
        """``f**(t) = c + d / t`` on each segment: yields ``(a, b, c, d)``."""
        I = self.running_integral()
        for (a, b, v), Ia in zip(self.segments(), I):
            yield a, b, v, Ia - v * a

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_start", "level"])
        for t, v in zip(self.starts, self.levels):
            w.writerow([repr(float(t)), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "StepFunction":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows or float(rows[0]["t_start"]) != 0.0:
            raise ValueError("step-function CSV must start at t = 0")
        return cls(tuple(float(r["t_start"]) for r in rows[1:]), tuple(float(r["level"]) for r in rows))


def _mask_values(f: GridFunction) -> np.ndarray:
    return np.abs(f.values[f.domain.mask])


def distribution(f: GridFunction) -> StepFunction:
    """``alpha_f(s) = |{|f| > s}|`` with measures counted in cells."""
    a = np.sort(_mask_values(f))
    vol = f.domain.cell_volume
    levels_at = np.unique(a[a > 0])
    if levels_at.size == 0:
        return StepFunction((), (0.0,))
    # number of cells strictly above each level
    above = a.size - np.searchsorted(a, levels_at, side="right")
    first = a.size - np.searchsorted(a, 0.0, side="right")
    levels = [int(first) * vol] + [int(c) * vol for c in above]
    return StepFunction(tuple(levels_at), tuple(levels))


def decreasing_rearrangement(f: GridFunction) -> StepFunction:
    """``f*``: the cell values of ``|f|`` sorted descending."""
    vals = np.sort(_mask_values(f), kind="stable")[::-1]
    return StepFunction.from_sorted(vals, f.domain.cell_volume)


def maximal_function(fstar: StepFunction, t) -> np.ndarray:
    """``f**(t) = (1/t) int_0^t f*`` evaluated exactly at the query points."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("f** is only defined for t > 0")
    idx = np.searchsorted(np.asarray(fstar.breakpoints), t, side="right")
    starts = fstar.starts
    v = np.asarray(fstar.levels)
    I = fstar.running_integral()
    return (I[idx] + v[idx] * (t - starts[idx])) / t


def schwarz_symmetrization(f: GridFunction, target: GridDomain) -> GridFunction:
    """``f_star(x) = f*(w_N |x|^N)`` sampled at the cell centres of ``target``."""
    fstar = decreasing_rearrangement(f)
    N = target.dim
    wN = sphere_volume(N)
    m = fstar.support_measure
    R = (m / wN) ** (1.0 / N)
    reach = min(min(-lo, hi) for lo, hi in zip(target.box_lo, target.box_hi))
    if R > reach:
        raise ValueError(f"target box too small: needs a centred ball of radius {R:.4g}, has {reach:.4g}")
    r = target.radius(np.zeros(N))
    vals = fstar(wN * r ** N)
    if np.any((vals > 0) & ~target.mask):
        raise ValueError("the symmetrised support leaves the target mask")
    return GridFunction(target, vals)


def hardy_littlewood_gap(f: GridFunction, g: GridFunction) -> float:
    """``int f* g* dt - int f g dx``, nonnegative up to rounding."""
    _check_same(f, g)
    m = f.domain.mask
    a = f.values[m]
    b = g.values[m]
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("the Hardy-Littlewood gap needs f, g >= 0")
    vol = f.domain.cell_volume
    rearranged = float(np.dot(np.sort(a)[::-1], np.sort(b)[::-1])) * vol
    return rearranged - float(np.dot(a, b)) * vol


def equimeasurability_defect(f: GridFunction, fs: GridFunction, levels) -> float:
    """Largest ``| |{|f| > s}| - |{|fs| > s}| |`` over the given levels."""
    a = _mask_values(f)
    b = _mask_values(fs)
    vol = f.domain.cell_volume
    return max(abs(int((a > s).sum()) * vol - int((b > s).sum()) * fs.domain.cell_volume) for s in levels)
