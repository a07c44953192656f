"""Variational p-capacity ``Cap_p(F, Omega)`` on grids.

The minimiser of the p-Dirichlet energy over ``{0 <= u <= 1, u = 1 on F,
u = 0 off Omega}`` is found by projected descent with backtracking.  The
descent metric is the lagged weighted Laplacian (one Kacanov step per
iteration), which for p = 2 is Newton's method.

For ``exterior == "far_field"`` domains the box truncates R^N and its faces
carry the exterior energy of the radial p-harmonic tail
``c |x - x0|^{-(N-p)/(p-1)}``, which is exact for balls centred at ``x0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import CompactSet, GridDomain, GridFunction, lagged_weights, p_energy_and_gradient
from .potentials import sphere_volume
from .solver import SolverConfig, WeightedLaplacian, armijo

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CapacityProblem:
    domain: GridDomain
    obstacle: CompactSet
    p: float
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        N = self.domain.dim
        if not 1 < self.p < N:
            raise ValueError(f"capacity needs 1 < p < N (p={self.p}, N={N})")
        if not self.obstacle.domain.same_grid(self.domain):
            raise ValueError("obstacle lives on a different grid")
        if np.any(self.obstacle.member & ~self.domain.mask):
            raise ValueError("obstacle must lie inside the domain")


@dataclass
class CapacityResult:
    value: float
    minimizer: GridFunction
    converged: bool
    iterations: int
    energies: list[float]

    def __iter__(self):
        # allows ``value, u = capacity(problem)``
        yield self.value
        yield self.minimizer


def capacity_ball_analytic(N: int, p: float, r: float) -> float:
    """``N w_N ((N-p)/(p-1))^(p-1) r^(N-p)``: capacity of ``B_r`` in R^N."""
    if not (N >= 2 and 1 < p < N):
        raise ValueError("need N >= 2 and 1 < p < N")
    if not r > 0:
        raise ValueError("radius must be positive")
    return N * sphere_volume(N) * ((N - p) / (p - 1)) ** (p - 1) * r ** (N - p)


def _far_field_weights(domain: GridDomain, p: float, x0: np.ndarray) -> np.ndarray:
    """Per-cell coefficients ``c_b`` of the exterior term ``sum c_b |u_b|^p``."""
    N = domain.dim
    a = (N - p) / (p - 1)
    h = domain.spacing
    pts = domain.points()
    out = np.zeros(domain.cells)
    for k in range(N):
        area = float(np.prod(np.delete(h, k)))
        for side, idx in ((-1.0, 0), (1.0, domain.cells[k] - 1)):
            sl = [slice(None)] * N
            sl[k] = idx
            sl = tuple(sl)
            y = pts[sl] - x0
            y[..., k] += side * h[k] / 2
            r = np.linalg.norm(y, axis=-1)
            cos = np.clip(side * y[..., k] / r, 0.0, None)
            out[sl] += area * a ** (p - 1) * r ** (1 - p) * cos
    return np.where(domain.mask, out, 0.0)


def _initial_guess(domain: GridDomain, F: np.ndarray, p: float) -> np.ndarray:
    N = domain.dim
    pts = domain.points()
    c = pts[F].mean(axis=0)
    r = np.linalg.norm(pts - c, axis=-1)
    RF = float(r[F].max()) + 0.5 * domain.h
    ball_like = F.sum() * domain.cell_volume >= 0.5 * sphere_volume(N) * RF ** N
    if ball_like:
        a = (N - p) / (p - 1)
        u = (np.maximum(r, 1e-12 * RF) / RF) ** (-a)
        if domain.exterior == "dirichlet":
            Rout = float(np.min(np.minimum(c - np.asarray(domain.box_lo), np.asarray(domain.box_hi) - c)))
            if Rout > RF:
                u = (u - (Rout / RF) ** (-a)) / (1 - (Rout / RF) ** (-a))
        u = np.clip(u, 0.0, 1.0)
    else:
        u = F.astype(float)
        for k in range(N):
            u = np.maximum(u, 0.5 * (np.roll(F, 1, axis=k) | np.roll(F, -1, axis=k)))
    u = np.where(domain.mask, u, 0.0)
    u[F] = 1.0
    return u


def capacity(problem: CapacityProblem, initial: np.ndarray | None = None) -> CapacityResult:
    """Discrete ``Cap_p(F, Omega)``; the value is the energy of the returned
    admissible function, hence an upper bound for the discrete minimum."""
    dom = problem.domain
    p = problem.p
    cfg = problem.solver
    F = problem.obstacle.member
    if not F.any():
        return CapacityResult(0.0, dom.zeros(), True, 0, [0.0])
    far = dom.exterior == "far_field"
    boundary = "interior" if far else "zero"
    fixed = F | ~dom.mask
    free = ~fixed
    x0 = dom.points()[F].mean(axis=0)
    robin = _far_field_weights(dom, p, x0) if far else None

    def energy_grad(u, want_grad=True):
        E, G, s = p_energy_and_gradient(u, dom, p, boundary)
        if robin is not None:
            au = np.abs(u)
            E += float(np.sum(robin * au ** p))
            G = G + robin * p * au ** (p - 1) * np.sign(u)
        G = np.where(free, G, 0.0)
        return E, G, s

    def energy(u):
        return energy_grad(u)[0]

    def project(u):
        u = np.clip(u, 0.0, 1.0)
        u[F] = 1.0
        u[~dom.mask] = 0.0
        return u

    u = project(_initial_guess(dom, F, p) if initial is None else np.array(initial, dtype=float))
    E, G, s = energy_grad(u)
    energies = [E]
    precond = WeightedLaplacian(dom, free, boundary) if cfg.metric == "laplacian" and free.any() else None
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if precond is not None:
            if p == 2 and precond.matrix is not None:
                pass  # constant metric, keep the factorisation
            elif (it - 1) % cfg.refresh_every == 0 or precond.matrix is None:
                extra = None
                if robin is not None:
                    extra = robin * p * (p - 1) * np.maximum(np.abs(u), 1e-3) ** (p - 2)
                precond.assemble(lagged_weights(s, p), extra, cfg.linear_tol)
            d = -precond.apply_inverse(G)
        else:
            d = -G / max(np.abs(G).max(), 1e-300) * dom.h
        u_new, E_new, t = armijo(energy, u, E, G, d, project, cfg)
        if t == 0.0:
            # preconditioned direction failed; fall back once to the plain gradient
            d = -G
            scale = dom.h / max(np.abs(G).max(), 1e-300)
            u_new, E_new, t = armijo(energy, u, E, G, d, project, cfg, t0=scale)
            if t == 0.0:
                converged = True
                break
        rel = (E - E_new) / max(abs(E_new), 1e-300)
        u = u_new
        E, G, s = energy_grad(u)
        energies.append(E)
        if rel < cfg.tol_rel_energy:
            converged = True
            break
    if not converged:
        log.warning("capacity solve stopped after %d iterations without converging", it)
    return CapacityResult(E, GridFunction(dom, u), converged, it, energies)


def capacity_of(domain: GridDomain, member: np.ndarray, p: float, cfg: SolverConfig | None = None) -> float:
    """Convenience: capacity value of a boolean cell set."""
    prob = CapacityProblem(domain, CompactSet(domain, member & domain.mask), p, cfg or SolverConfig())
    return capacity(prob).value


# -- property checks ------------------------------------------------------


@dataclass
class PropertyCheck:
    property: str
    lhs: float
    rhs: float
    passed: bool
    tolerance: float
    note: str = ""


@dataclass
class PropertyReport:
    checks: list[PropertyCheck]
    isoperimetric_constant: float | None = None

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass(frozen=True)
class PropertyCase:
    """One hypothesis of the capacity properties.

    ``kind`` is one of ``"monotone_set"`` (first obstacle inside second),
    ``"monotone_domain"`` (first domain inside second, same obstacle),
    ``"scaling"`` (second problem is the first scaled by ``lam``),
    ``"subadditive"`` (problems F1, F2, F1 u F2), ``"isometry"`` (second is
    an isometric image of the first).
    """

    kind: str
    problems: tuple[CapacityProblem, ...]
    lam: float = 1.0


def check_capacity_properties(cases: list[PropertyCase], tol: float = 0.10) -> PropertyReport:
    """Evaluate outer-measure, scaling and isometry properties case by case.

    Also records the best constant ``C`` with ``|F| <= C Cap(F)^(N/(N-p))``
    over every problem seen.
    """
    cache: dict[int, float] = {}

    def cap(prob):
        key = id(prob)
        if key not in cache:
            cache[key] = capacity(prob).value
        return cache[key]

    checks = []
    iso = []
    for case in cases:
        ps = case.problems
        vals = [cap(pr) for pr in ps]
        for pr, v in zip(ps, vals):
            N = pr.domain.dim
            if v > 0:
                iso.append(pr.obstacle.measure / v ** (N / (N - pr.p)))
        if case.kind == "monotone_set":
            lhs, rhs = vals[0], vals[1]
            checks.append(PropertyCheck("monotone in F", lhs, rhs, lhs <= rhs * (1 + tol), tol))
        elif case.kind == "monotone_domain":
            # Omega_1 inside Omega_2  =>  Cap(., Omega_2) <= Cap(., Omega_1)
            lhs, rhs = vals[1], vals[0]
            checks.append(PropertyCheck("monotone in Omega", lhs, rhs, lhs <= rhs * (1 + tol), tol))
        elif case.kind == "scaling":
            N = ps[0].domain.dim
            p = ps[0].p
            lhs = vals[1] / vals[0]
            rhs = case.lam ** (N - p)
            checks.append(PropertyCheck("scaling", lhs, rhs, abs(lhs / rhs - 1) <= tol, tol))
        elif case.kind == "subadditive":
            lhs = vals[2]
            rhs = vals[0] + vals[1]
            checks.append(PropertyCheck("subadditive", lhs, rhs, lhs <= rhs * (1 + tol), tol))
        elif case.kind == "isometry":
            lhs, rhs = vals[1], vals[0]
            checks.append(PropertyCheck("isometry", lhs, rhs, abs(lhs / rhs - 1) <= tol, tol))
        else:
            raise ValueError(f"unknown property kind {case.kind!r}")
    return PropertyReport(checks, max(iso) if iso else None)


@dataclass
class LocalizedComparison:
    lhs: float
    rhs: float
    ratio: float


def localized_capacity_comparison(F: CompactSet, x, r: float, p: float,
                                  cfg: SolverConfig | None = None) -> LocalizedComparison:
    """``Cap(F n B_r(x), Omega n B_2r(x))`` against ``Cap(F n B_r(x), Omega)``."""
    dom = F.domain
    x = np.asarray(x, dtype=float)
    lo = np.asarray(dom.box_lo)
    hi = np.asarray(dom.box_hi)
    if np.any(x - 2 * r < lo - 1e-12) or np.any(x + 2 * r > hi + 1e-12):
        raise ValueError("the doubled ball does not fit in the grid box")
    cfg = cfg or SolverConfig()
    rad = dom.radius(x)
    piece = F.member & (rad <= r)
    rhs = capacity_of(dom, piece, p, cfg)
    small = GridDomain(dom.box_lo, dom.box_hi, dom.cells, dom.mask & (rad < 2 * r), "dirichlet")
    lhs = capacity_of(small, piece, p, cfg)
    return LocalizedComparison(lhs, rhs, lhs / rhs if rhs > 0 else math.nan)
