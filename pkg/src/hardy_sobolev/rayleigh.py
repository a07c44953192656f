"""Best constant ``B_g`` through the dual Rayleigh problem.

``1/B_g = min { sum |grad u|^p : sum g |u|^p = 1 }`` is approached by
preconditioned descent on the quotient ``R(u) = E(u) / W(u)``: every step
moves along ``-M^{-1} grad R`` (``M`` the lagged weighted Laplacian, so p = 2
is inverse iteration), replaces ``u`` by ``|u|``, renormalises to
``W(u) = 1`` and backtracks on ``R``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridDomain, GridFunction, lagged_weights, p_energy_and_gradient, sample_potential
from .potentials import PotentialSpec
from .solver import NonConvergence, SolverConfig, WeightedLaplacian, armijo

log = logging.getLogger(__name__)

CONVERGENT = "CONVERGENT"
CONCENTRATING = "CONCENTRATING"


@dataclass(frozen=True)
class RayleighProblem:
    domain: GridDomain
    g: GridFunction
    p: float
    config: SolverConfig = field(default_factory=SolverConfig)
    init: GridFunction | None = None

    def __post_init__(self):
        if not 1 < self.p < self.domain.dim:
            raise ValueError(f"need 1 < p < N (p={self.p}, N={self.domain.dim})")
        if not self.g.domain.same_grid(self.domain):
            raise ValueError("g lives on a different grid")
        if np.any(self.g.values < 0):
            raise ValueError("the Rayleigh solver needs g >= 0 (pass g+ or |g|)")


@dataclass
class RayleighTrace:
    quotients: list[float] = field(default_factory=list)
    steps: list[float] = field(default_factory=list)
    snapshots: list[tuple[int, GridFunction]] = field(default_factory=list)
    converged: bool = False
    residual: float = math.nan


@dataclass
class RayleighResult:
    B_g: float
    u: GridFunction
    trace: RayleighTrace

    def __iter__(self):
        yield self.B_g
        yield self.u
        yield self.trace


def _weighted(u, g, p, vol):
    au = np.abs(u)
    W = float(np.sum(g * au ** p) * vol)
    GW = p * g * au ** (p - 1) * np.sign(u) * vol
    return W, GW


def default_initial(domain: GridDomain, seed: int = 0) -> np.ndarray:
    """Product of half sine waves over the box, lightly perturbed by ``seed``."""
    u = np.ones(domain.cells)
    lo = np.asarray(domain.box_lo)
    hi = np.asarray(domain.box_hi)
    for k, ax in enumerate(domain.axes()):
        shape = [1] * domain.dim
        shape[k] = -1
        u = u * np.sin(np.pi * (ax - lo[k]) / (hi[k] - lo[k])).reshape(shape)
    rng = np.random.default_rng(seed)
    u = u * (1 + 0.05 * rng.random(domain.cells))
    return np.where(domain.mask, u, 0.0)


def best_constant(problem: RayleighProblem, snapshots: int = 10) -> RayleighResult:
    """Estimate ``B_g`` as ``1 / R(u_final)``.

    Accepted steps never increase ``R``.  Stops when the relative change of
    ``R`` stayed below ``tol_rel_energy`` for ``stall_window`` consecutive
    steps and the eigen-residual is below ``residual_tol``, or after
    ``max_iters`` steps.
    """
    dom = problem.domain
    cfg = problem.config
    p = problem.p
    g = problem.g.values
    vol = dom.cell_volume
    free = dom.mask
    rng_seed = cfg.seed

    u = problem.init.values.copy() if problem.init is not None else default_initial(dom, rng_seed)
    u = np.abs(u)
    for attempt in range(6):
        W, _ = _weighted(u, g, p, vol)
        if W > 0:
            break
        if attempt == 5:
            raise ValueError("int g |u|^p vanishes for every initial guess; G^{-1}{1} looks empty")
        rng = np.random.default_rng(rng_seed + attempt + 1)
        u = np.where(dom.mask, rng.random(dom.cells), 0.0)
    u /= W ** (1 / p)

    def quotient(v):
        E = p_energy_and_gradient(v, dom, p)[0]
        Wv = _weighted(v, g, p, vol)[0]
        return E / Wv if Wv > 0 else math.inf

    def project(v):
        return np.where(free, np.abs(v), 0.0)

    def state(v):
        E, GE, s = p_energy_and_gradient(v, dom, p)
        Wv, GW = _weighted(v, g, p, vol)
        R = E / Wv
        grad = np.where(free, (GE - R * GW) / Wv, 0.0)
        return R, grad, s, GE, GW

    trace = RayleighTrace()
    R, grad, s, GE, GW = state(u)
    trace.quotients.append(R)
    every = max(1, cfg.max_iters // max(snapshots, 1)) if snapshots else 0
    if snapshots:
        trace.snapshots.append((0, GridFunction(dom, u)))
    precond = WeightedLaplacian(dom, free, "zero") if cfg.metric == "laplacian" else None
    quiet = 0
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if precond is not None:
            if precond.matrix is None or (p != 2 and (it - 1) % cfg.refresh_every == 0):
                precond.assemble(lagged_weights(s, p), None, 1e-6)
            d = -precond.apply_inverse(grad)
        else:
            d = -grad
        unew, Rnew, t = armijo(quotient, u, R, grad, d, project, cfg)
        if t == 0.0:
            d = -grad
            t0 = dom.h * float(np.abs(u).max()) / max(float(np.abs(grad).max()), 1e-300)
            unew, Rnew, t = armijo(quotient, u, R, grad, d, project, cfg, t0=t0)
            if t == 0.0:
                trace.converged = True
                break
        Wn = _weighted(unew, g, p, vol)[0]
        u = unew / Wn ** (1 / p)
        rel = (R - Rnew) / max(abs(Rnew), 1e-300)
        R, grad, s, GE, GW = state(u)
        trace.quotients.append(R)
        trace.steps.append(t)
        if snapshots and it % every == 0:
            trace.snapshots.append((it, GridFunction(dom, u)))
        quiet = quiet + 1 if rel < cfg.tol_rel_energy else 0
        if quiet >= cfg.stall_window:
            res = _residual(GE, GW, R, free)
            if res <= cfg.residual_tol:
                trace.converged = True
                break
    trace.residual = _residual(GE, GW, R, free)
    if snapshots and (not trace.snapshots or trace.snapshots[-1][0] != it):
        trace.snapshots.append((it, GridFunction(dom, u)))
    if not trace.converged:
        log.info("Rayleigh descent stopped after %d iterations (R=%.6g, residual=%.2e)", it, R, trace.residual)
    return RayleighResult(1.0 / R, GridFunction(dom, u), trace)


def _residual(GE, GW, lam, free):
    r = np.where(free, GE - lam * GW, 0.0)
    den = float(np.linalg.norm(np.where(free, GE, 0.0)))
    return float(np.linalg.norm(r)) / den if den > 0 else math.inf


def evp_residual(u: GridFunction, g: GridFunction, p: float, lam: float | None = None) -> float:
    """Relative residual of ``-Delta_p u = lam g |u|^(p-2) u`` tested against
    every grid cell; ``lam`` defaults to the quotient ``R(u)``."""
    dom = u.domain
    E, GE, _ = p_energy_and_gradient(u.values, dom, p)
    W, GW = _weighted(u.values, g.values, p, dom.cell_volume)
    if lam is None:
        lam = E / W
    return _residual(GE, GW, lam, dom.mask)


# -- nested boxes ---------------------------------------------------------


@dataclass
class NestedEstimate:
    L: float
    intervals: int
    B_g: float
    result: RayleighResult


def best_constant_nested(spec: PotentialSpec, p: float, N: int, Ls=(2.0, 4.0, 8.0), h: float = 0.125,
                         config: SolverConfig | None = None, snapshots: int = 10,
                         m: int = 3) -> list[NestedEstimate]:
    """``B_g`` on the boxes ``(-L, L)^N`` at fixed spacing ``h``.

    The boxes are nested, so the estimates increase with ``L`` toward the
    value on R^N.
    """
    out = []
    for L in Ls:
        n = int(round(2 * L / h))
        dom = GridDomain.node_aligned([-L] * N, [L] * N, n)
        g = sample_potential(spec, dom, m)
        res = best_constant(RayleighProblem(dom, g, p, config or SolverConfig()), snapshots)
        out.append(NestedEstimate(float(L), n, res.B_g, res))
    return out


# -- concentration diagnostic ---------------------------------------------


@dataclass
class ConcentrationDiagnostic:
    verdict: str
    centers: list[list[float]]
    fractions: dict[str, list[float]]
    outside_fraction: list[float]
    rel_radius: float
    witness: str | None = None


def _mass_fractions(u: GridFunction, g: GridFunction, p: float, centers, rel_radius: float):
    dom = u.domain
    dens = g.values * np.abs(u.values) ** p
    total = float(dens.sum())
    rho = rel_radius * dom.half_width()
    fr = []
    for c in centers:
        inside = dom.radius(c) <= rho
        fr.append(float(dens[inside].sum()) / total if total > 0 else 0.0)
    outside = dom.radius(dom.center) > 0.5 * dom.half_width()
    return fr, float(dens[outside].sum()) / total if total > 0 else 0.0


def concentration_diagnostic(traces, g, p: float, centers, rel_radius: float = 0.125,
                             rise: float = 0.05, slack: float = 0.01) -> ConcentrationDiagnostic:
    """Track how much of ``g |u_k|^p`` sits in ``B_rho(x)`` along a minimising
    sequence, with ``rho = rel_radius * (box half width)``.

    ``traces`` is one trace or a list of them (e.g. nested boxes or refined
    grids, in order); ``g`` is the matching weight or list of weights.  A
    centre is a concentration witness when its mass fraction rises by at
    least ``rise`` along the sequence without dropping by more than
    ``slack`` between consecutive snapshots.
    """
    if isinstance(traces, RayleighTrace):
        traces = [traces]
        g = [g]
    elif isinstance(g, GridFunction):
        g = [g] * len(traces)
    centers = [list(map(float, c)) for c in centers]
    fractions = {str(i): [] for i in range(len(centers))}
    outside = []
    for tr, gk in zip(traces, g):
        for _, u in tr.snapshots:
            fr, out = _mass_fractions(u, gk, p, centers, rel_radius)
            for i, f in enumerate(fr):
                fractions[str(i)].append(f)
            outside.append(out)
    verdict = CONVERGENT
    witness = None
    for i, seq in fractions.items():
        if len(seq) < 2:
            continue
        steady = all(b >= a - slack for a, b in zip(seq, seq[1:]))
        if steady and seq[-1] - seq[0] >= rise:
            verdict = CONCENTRATING
            witness = i
            break
    return ConcentrationDiagnostic(verdict, centers, fractions, outside, rel_radius,
                                   None if witness is None else str(centers[int(witness)]))


def require_converged(result: RayleighResult) -> RayleighResult:
    if not result.trace.converged:
        raise NonConvergence(f"Rayleigh descent did not converge (residual {result.trace.residual:.2e})")
    return result
