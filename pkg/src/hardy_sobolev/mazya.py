"""Maz'ya norm estimates, concentration functions, the singular set and the
compactness / attainment checks.

``||g|| = sup_F int_F g / Cap_p(F, Omega)`` is estimated from below over
explicit set families.  Ball ratios are computed in windows around the ball
(half width ``window_factor * r``) resolved with ``cells_per_radius`` cells per
radius, with the far-field closure on the window faces and Omega's mask inside
the window.  Window capacities depend only on the window geometry, so they are
cached and reused across centres.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .capacity import CapacityProblem, capacity
from .grid import CompactSet, GridDomain, GridFunction, sample_potential
from .potentials import PotentialSpec, sphere_volume
from .solver import SolverConfig

log = logging.getLogger(__name__)

COMPACT = "COMPACT"
NOT_COMPACT = "NOT_COMPACT"
ATTAINED_SUFFICIENT = "ATTAINED_SUFFICIENT"
INCONCLUSIVE = "INCONCLUSIVE"
NO_POSITIVE_MASS = "NO_POSITIVE_MASS"
DECAYING = "decaying"
NON_DECAYING = "non-decaying"
INFINITY = "inf"


def hardy_constant(p: float) -> float:
    """``C_H = p^p (p-1)^(1-p)``."""
    if not p > 1:
        raise ValueError("need p > 1")
    return p ** p * (p - 1) ** (1 - p)


# -- potentials on windows -------------------------------------------------


class PotentialField:
    """A potential on a base domain that can be resampled on sub-windows.

    With a ``spec`` every window is sampled afresh at its own resolution;
    with grid values only, windows are block averages of the base cells.
    """

    def __init__(self, domain: GridDomain, values: GridFunction | None = None,
                 spec: PotentialSpec | None = None, m: int = 3, positive_part: bool = False):
        if values is None and spec is None:
            raise ValueError("need grid values or a potential spec")
        self.domain = domain
        self.spec = spec
        self.m = m
        self.positive_part = positive_part
        self._values = values

    @classmethod
    def of(cls, g, domain: GridDomain | None = None, m: int = 3) -> "PotentialField":
        if isinstance(g, PotentialField):
            return g
        if isinstance(g, GridFunction):
            return cls(g.domain, values=g)
        if isinstance(g, PotentialSpec):
            if domain is None:
                raise ValueError("a potential spec needs a base domain")
            return cls(domain, spec=g, m=m)
        raise TypeError(f"cannot build a potential from {type(g).__name__}")

    def positive(self) -> "PotentialField":
        return PotentialField(self.domain, self._values, self.spec, self.m, positive_part=True)

    @property
    def values(self) -> GridFunction:
        if self._values is None:
            self._values = sample_potential(self.spec, self.domain, self.m)
        v = self._values
        return v.positive_part() if self.positive_part else v

    def seeds(self, lattice_axis: list[np.ndarray] | None = None) -> list[np.ndarray]:
        """Centres suggested by the declared singularities."""
        if self.spec is None:
            return []
        N = self.domain.dim
        out = []
        for s in self.spec.singularities():
            if s["type"] == "point":
                out.append(np.asarray(s.get("at") or np.zeros(N), dtype=float))
            elif s["type"] == "axis":
                k = int(s["k"])
                off = np.asarray(s.get("offset") or np.zeros(k), dtype=float)
                rest = [np.array([c]) for c in self.domain.center[k:]]
                if lattice_axis is not None:
                    rest = [np.union1d(r, lattice_axis[k + i]) for i, r in enumerate(rest)]
                for y in product(*rest):
                    out.append(np.concatenate([off, np.asarray(y, dtype=float)]))
            elif s["type"] == "sphere":
                c = np.asarray(s.get("center") or np.zeros(N), dtype=float)
                for k in range(N):
                    e = np.zeros(N)
                    e[k] = float(s["radius"])
                    out.append(c + e)
                    out.append(c - e)
        return out

    def window(self, center, half: float, H: float) -> tuple[GridDomain, np.ndarray, np.ndarray]:
        """Window of ``2K+1`` cells of size about ``H`` per axis centred at
        ``center`` with ``K = ceil(half / H)``; returns the far-field window
        domain, the potential on it and the window's own centre."""
        if self.spec is not None:
            return self._spec_window(np.asarray(center, dtype=float), half, H)
        return self._grid_window(np.asarray(center, dtype=float), half, H)

    def _membership(self, pts: np.ndarray) -> np.ndarray:
        base = self.domain
        lo = np.asarray(base.box_lo)
        hi = np.asarray(base.box_hi)
        inside = np.all((pts >= lo) & (pts <= hi), axis=-1)
        idx = np.floor((pts - lo) / base.spacing).astype(int)
        idx = np.clip(idx, 0, np.asarray(base.cells) - 1)
        in_mask = base.mask[tuple(idx[..., k] for k in range(base.dim))]
        if base.exterior == "far_field":
            return np.where(inside, in_mask, True)
        return inside & in_mask

    def _spec_window(self, x, half, H):
        N = self.domain.dim
        K = max(1, int(math.ceil(half / H - 1e-9)))
        n = 2 * K + 1
        lo = x - (K + 0.5) * H
        hi = x + (K + 0.5) * H
        dom = GridDomain.box(lo, hi, [n] * N, exterior="far_field")
        mask = self._membership(dom.points())
        dom = dom.with_mask(mask)
        # m^N subsamples per cell get expensive in 4D windows
        m = self.m if N <= 3 else min(self.m, 2)
        g = sample_potential(self.spec, dom, m).values
        if self.positive_part:
            g = np.maximum(g, 0.0)
        return dom, g, x

    def _grid_window(self, x, half, H):
        base = self.domain
        N = base.dim
        h = base.spacing
        c = np.maximum(1, np.round(H / h).astype(int))
        c = c + (c % 2 == 0)  # odd blocks keep the centre cell in the middle
        Hk = c * h
        K = np.maximum(1, np.ceil(half / Hk - 1e-9).astype(int))
        i0 = np.asarray(base.index_of(x))
        start = i0 - K * c - c // 2
        stop = i0 + K * c + c // 2 + 1
        vals = self.values.values
        mask = base.mask
        pad_lo = np.maximum(0, -start)
        pad_hi = np.maximum(0, stop - np.asarray(base.cells))
        sl = tuple(slice(max(0, s), min(e, n)) for s, e, n in zip(start, stop, base.cells))
        pads = list(zip(pad_lo, pad_hi))
        fg = np.pad(vals[sl], pads)
        fm = np.pad(mask[sl].astype(float), pads, constant_values=1.0 if base.exterior == "far_field" else 0.0)
        shape = []
        for k in range(N):
            shape += [2 * K[k] + 1, c[k]]
        axes = tuple(range(1, 2 * N, 2))
        g = fg.reshape(shape).mean(axis=axes)
        cm = fm.reshape(shape).mean(axis=axes) >= 0.5
        center = np.asarray(base.box_lo) + (i0 + 0.5) * h
        lo = center - (K + 0.5) * Hk
        hi = center + (K + 0.5) * Hk
        dom = GridDomain(tuple(lo), tuple(hi), tuple(int(v) for v in 2 * K + 1), cm, "far_field")
        g = np.where(cm, g, 0.0)
        return dom, g, center


# -- set ratios ---------------------------------------------------------------


@dataclass
class SetRatio:
    descriptor: str
    integral: float
    capacity: float
    ratio: float


class CapacityCache:
    """Capacities keyed by window geometry and obstacle."""

    def __init__(self, p: float, config: SolverConfig | None = None):
        self.p = p
        self.config = config or SolverConfig()
        self._store: dict[str, float] = {}
        self.solves = 0

    def _key(self, dom: GridDomain, member: np.ndarray) -> str:
        hsh = hashlib.sha1()
        hsh.update(repr((self.p, dom.cells, tuple(np.round(dom.spacing, 12)), dom.exterior)).encode())
        hsh.update(np.packbits(dom.mask).tobytes())
        hsh.update(np.packbits(member).tobytes())
        return hsh.hexdigest()

    def __call__(self, dom: GridDomain, member: np.ndarray) -> float:
        key = self._key(dom, member)
        if key not in self._store:
            res = capacity(CapacityProblem(dom, CompactSet(dom, member), self.p, self.config))
            if not res.converged:
                log.warning("capacity solve did not converge (%d iterations)", res.iterations)
            self._store[key] = res.value
            self.solves += 1
        return self._store[key]


def _auto_cells_per_radius(N: int) -> int:
    return 4 if N <= 3 else 3


def _ratio(cache, dom, g, member, descriptor, integrand_mask=None) -> SetRatio:
    member = member & dom.mask
    if not member.any():
        return SetRatio(descriptor, 0.0, math.nan, 0.0)
    w = g if integrand_mask is None else np.where(integrand_mask, g, 0.0)
    integral = float(np.sum(np.abs(w[member]))) * dom.cell_volume
    if integral == 0.0:
        return SetRatio(descriptor, 0.0, math.nan, 0.0)
    cap = cache(dom, member)
    return SetRatio(descriptor, integral, cap, integral / cap if cap > 0 else math.inf)


def _ball_member(dom: GridDomain, center, r: float) -> np.ndarray:
    rad = dom.radius(center)
    member = rad <= r
    if not member.any():
        member = rad <= rad.min()
    return member & dom.mask


def window_set_ratios(fieldg: PotentialField, p: float, center, r: float, cache: CapacityCache,
                      superlevel: bool = False, cells_per_radius: int | None = None,
                      window_factor: float = 2.0) -> list[SetRatio]:
    """Ratios of sets inside ``B_r(center)``: the ball itself and, when
    ``superlevel`` is set, the top half of its cells by ``g``."""
    N = fieldg.domain.dim
    cpr = cells_per_radius or _auto_cells_per_radius(N)
    dom, g, c = fieldg.window(center, window_factor * r, r / cpr)
    ball = _ball_member(dom, c, r)
    tag = f"ball(c={_fmt(center)}, r={r:.6g})"
    out = [_ratio(cache, dom, g, ball, tag)]
    if superlevel:
        vals = g[ball]
        if vals.size > 4 and np.ptp(vals) > 1e-12 * max(np.abs(vals).max(), 1e-300):
            for q in (0.5,):
                t = np.quantile(vals, q)
                member = ball & (g > t)
                if member.any() and member.sum() < ball.sum():
                    out.append(_ratio(cache, dom, g, member, f"superlevel(c={_fmt(center)}, r={r:.6g}, q={q})"))
    return out


def ball_ratio(g, p: float, center, r: float, domain: GridDomain | None = None,
               cells_per_radius: int | None = None, cache: CapacityCache | None = None) -> SetRatio:
    """``int_{B_r} g / Cap_p(B_r)`` for one ball."""
    fg = PotentialField.of(g, domain)
    cache = cache or CapacityCache(p)
    return window_set_ratios(fg, p, center, r, cache, cells_per_radius=cells_per_radius)[0]


def _fmt(x) -> str:
    return "(" + ", ".join(f"{float(v):.6g}" for v in np.atleast_1d(x)) + ")"


# -- lower bound ------------------------------------------------------------


@dataclass(frozen=True)
class SetFamily:
    """Sets tried by :func:`mazya_lower_bound`.

    ``centers``/``radii`` give balls (``None``: defaults), ``quantiles`` the
    superlevel sets ``{g > t}`` with ``t`` the quantile of the positive
    values, ``annuli`` radial shells ``(center, r_in, r_out)``.
    """

    centers: tuple | None = None
    radii: tuple | None = None
    quantiles: tuple = (0.5, 0.9, 0.99)
    annuli: tuple = ()
    lattice: int = 3

    def is_empty(self) -> bool:
        return (self.centers is not None and len(self.centers) == 0 or self.radii is not None and len(self.radii) == 0) \
            and not self.quantiles and not self.annuli


@dataclass
class MazyaEstimate:
    lower: float
    family_log: list[tuple[str, float]]
    upper: float | None = None
    details: list[SetRatio] = field(default_factory=list)

    @property
    def interval(self) -> tuple[float, float | None]:
        return self.lower, self.upper


def lattice_points(domain: GridDomain, per_axis: int) -> list[np.ndarray]:
    axes = [lo + (np.arange(per_axis) + 0.5) * (hi - lo) / per_axis
            for lo, hi in zip(domain.box_lo, domain.box_hi)]
    return [np.asarray(c, dtype=float) for c in product(*axes)]


def _dedupe(points, tol):
    out = []
    for x in points:
        if all(np.linalg.norm(x - y) > tol for y in out):
            out.append(x)
    return out


def _in_omega(fg: PotentialField, x) -> bool:
    return bool(fg._membership(np.asarray(x, dtype=float)[None, :])[0])


def mazya_lower_bound(g, p: float, family: SetFamily | None = None, domain: GridDomain | None = None,
                      config: SolverConfig | None = None, cache: CapacityCache | None = None,
                      upper: float | None = None) -> MazyaEstimate:
    """Best ratio ``int_F |g| / Cap_p(F, Omega)`` over a set family.

    Balls come from windowed solves; superlevel sets and annuli are solved
    on the whole base domain in its own exterior mode.
    """
    fg = PotentialField.of(g, domain)
    dom = fg.domain
    N = dom.dim
    if not 1 < p < N:
        raise ValueError(f"need 1 < p < N (p={p}, N={N})")
    family = family or SetFamily()
    if family.is_empty():
        raise ValueError("empty set family")
    cache = cache or CapacityCache(p, config)
    L = dom.half_width()
    centers = family.centers
    if centers is None:
        centers = [dom.center] + fg.seeds() + lattice_points(dom, family.lattice)
    centers = _dedupe([np.asarray(c, dtype=float) for c in centers], 1e-9)
    centers = [c for c in centers if _in_omega(fg, c)]
    radii = family.radii if family.radii is not None else (L / 2, L / 4, L / 8)
    details: list[SetRatio] = []
    for c in centers:
        for r in radii:
            details.extend(window_set_ratios(fg, p, c, float(r), cache))
    gv = np.abs(fg.values.values)
    pos = gv[dom.mask & (gv > 0)]
    full_cache = CapacityCache(p, config)
    if pos.size:
        for q in family.quantiles:
            t = float(np.quantile(pos, q))
            member = dom.mask & (gv > t)
            if member.any():
                details.append(_ratio(full_cache, dom, gv, member, f"superlevel(q={q}, t={t:.6g})"))
    for c, r_in, r_out in family.annuli:
        rad = dom.radius(c)
        member = dom.mask & (rad > r_in) & (rad <= r_out)
        details.append(_ratio(full_cache, dom, gv, member, f"annulus(c={_fmt(c)}, {r_in:.6g}, {r_out:.6g})"))
    if not details:
        raise ValueError("the set family produced no sets inside Omega")
    log_ = [(d.descriptor, d.ratio) for d in details]
    return MazyaEstimate(max(r for _, r in log_), log_, upper, details)


# -- concentration function ---------------------------------------------------


@dataclass
class ConcentrationMap:
    """Ladders of ``||g chi_{B_r(x)}||`` estimates.

    ``values[i][k]`` belongs to ``centers[i]`` and ``radii[k]`` (radii
    decreasing); ``extrapolated[i]`` is the smallest-radius value, reported as
    the ``C_g`` estimate without extrapolating the limit.  The infinity ladder
    uses shells and exteriors of balls ``B_R`` with ``R`` increasing.
    """

    p: float
    centers: list[list[float]]
    radii: list[float]
    values: list[list[float]]
    best: list[list[SetRatio]]
    extrapolated: list[float]
    classification: list[str]
    slopes: list[float]
    infinity_radii: list[float] = field(default_factory=list)
    infinity_values: list[float] = field(default_factory=list)
    infinity_classification: str = DECAYING
    infinity_note: str = ""
    note: str = "limit not extrapolated; decay classified by the log-log slope of the two smallest radii (heuristic)"

    @property
    def infinity_estimate(self) -> float:
        return self.infinity_values[-1] if self.infinity_values else 0.0

    def rows(self) -> list[dict]:
        out = []
        for c, ladder in zip(self.centers, self.best):
            for r, s in zip(self.radii, ladder):
                out.append({"center": _fmt(c), "r": r, "ratio": s.ratio,
                            "capacity": s.capacity, "integral": s.integral})
        return out


def _slope(values, radii, p):
    """Log-log slope of the last two ladder entries (``+inf`` when the value
    reaches zero)."""
    v1, v2 = values[-2], values[-1]
    r1, r2 = radii[-2], radii[-1]
    if v2 <= 0:
        return math.inf
    if v1 <= 0:
        return 0.0
    return math.log(v1 / v2) / abs(math.log(r1 / r2))


def concentration_function(g, p: float, centers="auto", radii=None, domain: GridDomain | None = None,
                           include_infinity: bool = True, lattice: int | None = None,
                           config: SolverConfig | None = None, cells_per_radius: int | None = None,
                           cache: CapacityCache | None = None, superlevel_at_seeds: bool = True) -> ConcentrationMap:
    """Concentration ladders at each centre plus the ladder at infinity.

    ``centers="auto"`` uses the declared singular points and the box centre
    together with a lattice of ``lattice`` points per axis (default ``round(9^(min(N,3)/N))``,
    i.e. ``9^min(N,3)`` centres).  ``radii`` defaults to ``L/4, L/8, L/16``
    with ``L`` the box half width (``16h, 8h, 4h`` for grid-only potentials).
    """
    fg = PotentialField.of(g, domain)
    dom = fg.domain
    N = dom.dim
    cache = cache or CapacityCache(p, config)
    L = dom.half_width()
    if radii is None:
        radii = (L / 4, L / 8, L / 16) if fg.spec is not None else (16 * dom.h, 8 * dom.h, 4 * dom.h)
    radii = sorted((float(r) for r in radii), reverse=True)
    if fg.spec is None:
        ok = [r for r in radii if r >= 4 * dom.h * (1 - 1e-9)]
        for r in radii:
            if r not in ok:
                log.warning("radius %.4g is below the resolution limit 4h = %.4g; skipped", r, 4 * dom.h)
        radii = ok
    if len(radii) < 2:
        raise ValueError("need at least two resolvable radii")
    seeds = _dedupe(fg.seeds(), 1e-9)
    seeds = [s for s in seeds if np.all(s >= np.asarray(dom.box_lo)) and np.all(s <= np.asarray(dom.box_hi))]
    if isinstance(centers, str):
        if centers != "auto":
            raise ValueError("centers must be 'auto' or a list of points")
        per_axis = lattice or max(1, int(round(9 ** (min(N, 3) / N))))
        pts = seeds + [dom.center] + lattice_points(dom, per_axis)
    else:
        pts = [np.asarray(c, dtype=float) for c in centers]
    pts = _dedupe(pts, 1e-9)
    seed_keys = {tuple(np.round(s, 9)) for s in seeds}
    values, best = [], []
    for x in pts:
        ladder, ladder_best = [], []
        sl = superlevel_at_seeds and tuple(np.round(x, 9)) in seed_keys
        for r in radii:
            rs = window_set_ratios(fg, p, x, r, cache, superlevel=sl, cells_per_radius=cells_per_radius)
            b = max(rs, key=lambda s: s.ratio)
            ladder.append(b.ratio)
            ladder_best.append(b)
        # sets inside a smaller ball also lie inside the larger ones
        for k in range(len(ladder) - 2, -1, -1):
            if ladder[k + 1] > ladder[k]:
                ladder[k] = ladder[k + 1]
                ladder_best[k] = ladder_best[k + 1]
        values.append(ladder)
        best.append(ladder_best)
    slopes = [_slope(v, radii, p) for v in values]
    scale = max([v[0] for v in values] + [0.0])
    cls = []
    for v, s in zip(values, slopes):
        tiny = v[-1] <= 1e-9 * scale or scale == 0
        cls.append(DECAYING if tiny or s >= p / 2 else NON_DECAYING)
    cmap = ConcentrationMap(p, [list(map(float, x)) for x in pts], list(radii), values, best,
                            [v[-1] for v in values], cls, slopes)
    if include_infinity:
        _infinity_ladder(fg, p, cmap, cache)
    return cmap


def _infinity_ladder(fg: PotentialField, p: float, cmap: ConcentrationMap, cache: CapacityCache):
    dom = fg.domain
    if dom.exterior != "far_field":
        cmap.infinity_note = "bounded domain: infinity is not in the closure of Omega"
        cmap.infinity_classification = DECAYING
        return
    N = dom.dim
    L = dom.half_width()
    c = dom.center
    n = min(25, int(30000 ** (1 / N)))
    n -= 1 - n % 2
    win, g, cw = fg.window(c, L, 2 * L / n)
    rad = win.radius(cw)
    inside_box = np.all((win.points() >= np.asarray(dom.box_lo)) & (win.points() <= np.asarray(dom.box_hi)), axis=-1)
    Rs = [L / 8, L / 4, L / 2]
    vals = []
    for R in Rs:
        outer = win.mask & inside_box & (rad > R)
        shell = outer & (rad <= 2 * R)
        rs = [_ratio(cache, win, g, shell, f"shell(R={R:.6g})"),
              _ratio(cache, win, g, outer, f"exterior(R={R:.6g})")]
        vals.append(max(s.ratio for s in rs))
    # the exterior family at R contains the one at any larger R
    for k in range(len(vals) - 2, -1, -1):
        vals[k] = max(vals[k], vals[k + 1])
    cmap.infinity_radii = Rs
    cmap.infinity_values = vals
    scale = max([vals[0]] + [v[0] for v in cmap.values] + [0.0])
    inv = [1 / R for R in Rs]
    s = _slope(vals, inv, p)
    tiny = vals[-1] <= 1e-9 * scale or scale == 0
    cmap.infinity_classification = DECAYING if tiny or s >= p / 2 else NON_DECAYING
    cmap.infinity_note = "box truncation of R^N; g outside the box is ignored"


def singular_set(cmap: ConcentrationMap, threshold: float | None = None) -> list[list[float]]:
    """Centres with a non-decaying ladder whose smallest-radius value exceeds
    ``threshold`` (default: ten times the value the ladder would reach under
    ``r^p`` decay from its largest radius)."""
    out = []
    ratio = cmap.radii[-1] / cmap.radii[0]
    for x, v, cl in zip(cmap.centers, cmap.values, cmap.classification):
        t = threshold if threshold is not None else 10 * v[0] * ratio ** cmap.p
        if cl == NON_DECAYING and v[-1] > t:
            out.append(x)
    return out


# -- verdicts ---------------------------------------------------------------


@dataclass
class Verdict:
    verdict: str
    witnesses: list[str]
    detail: dict = field(default_factory=dict)


def compactness_verdict(g, p: float, cmap: ConcentrationMap | None = None, **kw) -> Verdict:
    """COMPACT when every ladder decays (empty singular set and decay at
    infinity), NOT_COMPACT with the non-decaying centres as witnesses."""
    if cmap is None:
        cmap = concentration_function(g, p, **kw)
    sing = singular_set(cmap)
    witnesses = [_fmt(x) for x in sing]
    if cmap.infinity_classification == NON_DECAYING:
        witnesses.append(INFINITY)
    detail = {"singular_set": sing, "infinity_values": cmap.infinity_values,
              "infinity_note": cmap.infinity_note, "note": cmap.note}
    return Verdict(NOT_COMPACT if witnesses else COMPACT, witnesses, detail)


@dataclass
class Sandwich:
    lower: float
    upper: float
    B_g: float
    C_H: float
    consistent: bool
    slack: float


def hardy_sandwich(lower: float, B_g: float, p: float, tol: float = 1e-6) -> Sandwich:
    """``||g|| <= B_g <= C_H ||g||`` with ``lower`` standing in for ``||g||``.

    ``slack`` is how much ``lower`` would have to grow for the right-hand
    inequality to hold; only ``lower > B_g + tol`` is an inconsistency.
    """
    CH = hardy_constant(p)
    if lower < 0 or B_g < 0:
        raise ValueError("norm estimates must be nonnegative")
    slack = max(0.0, B_g / CH - lower)
    return Sandwich(lower, CH * lower, B_g, CH, lower <= B_g + tol, slack)


def perturbation_threshold(h_norm: float, phi_norm: float, p: float) -> float:
    """``eps0 = (2 C_H - 1) ||h|| / ||phi||``."""
    if not phi_norm > 0:
        raise ValueError("phi must have a positive norm")
    if h_norm < 0:
        raise ValueError("||h|| must be nonnegative")
    return (2 * hardy_constant(p) - 1) * h_norm / phi_norm


def attainment_criterion(cmap: ConcentrationMap, B_g: float, domain: GridDomain,
                         covering_fraction: float = 0.01) -> Verdict:
    """Sufficient-criterion check for attainment of ``B_g``.

    (a) the smallest-ladder balls around the singular set cover less than
    ``covering_fraction`` of ``|Omega n box|``; (b) ``C_H`` times every
    ``C_g`` estimate, infinity included, stays below ``B_g``.
    """
    CH = hardy_constant(cmap.p)
    sing = singular_set(cmap)
    N = domain.dim
    cover = len(sing) * sphere_volume(N) * cmap.radii[-1] ** N
    frac = cover / domain.measure if domain.measure > 0 else math.inf
    worst = max(cmap.extrapolated + [cmap.infinity_estimate])
    a = frac < covering_fraction
    b = CH * worst < B_g
    detail = {"label": "sufficient-criterion check", "covering_fraction": frac,
              "C_H_times_max_Cg": CH * worst, "B_g": B_g, "covering_ok": a, "concentration_ok": b}
    witnesses = []
    if not a:
        witnesses.append("singular-set covering too large")
    if not b:
        i = int(np.argmax(cmap.extrapolated)) if cmap.extrapolated else None
        if cmap.infinity_estimate >= worst:
            witnesses.append(INFINITY)
        elif i is not None:
            witnesses.append(_fmt(cmap.centers[i]))
    return Verdict(ATTAINED_SUFFICIENT if a and b else INCONCLUSIVE, witnesses, detail)


def positive_part_criterion(g, p: float, domain: GridDomain | None = None, **kw) -> Verdict:
    """ATTAINED_SUFFICIENT when ``g+`` is compact; NO_POSITIVE_MASS when
    ``g+`` vanishes."""
    fg = PotentialField.of(g, domain).positive()
    if not np.any(fg.values.values > 0):
        return Verdict(NO_POSITIVE_MASS, [], {"note": "g+ = 0, so int g |u|^p = 1 has no solution"})
    v = compactness_verdict(fg, p, **kw)
    if v.verdict == COMPACT:
        return Verdict(ATTAINED_SUFFICIENT, [], {"positive_part": COMPACT, **v.detail})
    return Verdict(INCONCLUSIVE, v.witnesses, {"positive_part": NOT_COMPACT, **v.detail})


@dataclass
class PiComparison:
    pi_r: float
    c_r: float
    pi_2r: float


def pi_consistency(g, p: float, center, r: float, domain: GridDomain | None = None,
                   cache: CapacityCache | None = None, cells_per_radius: int | None = None) -> PiComparison:
    """Three estimators at one centre: sets inside ``B_r`` (``Pi`` at ``r``),
    the integrand ``g chi_{B_r}`` over sets up to ``B_2r`` and sets inside
    ``B_2r``; ordered ``pi_r <= c_r <= pi_2r`` by construction of the families."""
    fg = PotentialField.of(g, domain)
    cache = cache or CapacityCache(p)
    N = fg.domain.dim
    cpr = cells_per_radius or _auto_cells_per_radius(N)
    # one window at the resolution of B_r holding every set up to B_2r
    dom, gw, c = fg.window(center, 4 * r, r / cpr)
    rad = dom.radius(c)
    inner = rad <= r
    sets_r = [_ball_member(dom, c, r), _ball_member(dom, c, r / 2)]
    sets_2r = [_ball_member(dom, c, rho) for rho in (1.5 * r, 2 * r)]
    pi_r = max(_ratio(cache, dom, gw, m, "").ratio for m in sets_r)
    c_r = max(_ratio(cache, dom, gw, m, "", integrand_mask=inner).ratio for m in sets_r + sets_2r)
    pi_2r = max(_ratio(cache, dom, gw, m, "").ratio for m in sets_r + sets_2r)
    return PiComparison(pi_r, c_r, pi_2r)
