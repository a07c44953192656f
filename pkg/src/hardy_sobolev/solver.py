"""Shared pieces of the energy minimisers: configuration, the weighted
Laplacian preconditioner and the backtracking line search."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import GridDomain, difference_matrices

# below this many unknowns a sparse LU beats building an AMG hierarchy
DIRECT_LIMIT = 6000


class NonConvergence(RuntimeError):
    """Raised by callers that require a converged solve."""


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 200
    initial_step: float = 1.0
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    tol_rel_energy: float = 1e-7
    seed: int = 0
    # "laplacian": descend along -M^{-1} grad with M the lagged weighted
    # Laplacian; "euclidean": plain gradient.
    metric: str = "laplacian"
    linear_tol: float = 1e-9
    max_backtracks: int = 40
    stall_window: int = 25
    refresh_every: int = 1
    residual_tol: float = 1e-5

    def __post_init__(self):
        if not self.tol_rel_energy > 0:
            raise ValueError("tol_rel_energy must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if self.metric not in ("laplacian", "euclidean"):
            raise ValueError("metric must be 'laplacian' or 'euclidean'")

    def to_dict(self) -> dict:
        return asdict(self)


class WeightedLaplacian:
    """Assembles ``M = vol * sum_k D_k^T diag(w) D_k`` on a subset of cells and
    applies ``M^{-1}`` (sparse LU when small, smoothed-aggregation AMG + CG
    otherwise)."""

    def __init__(self, domain: GridDomain, free: np.ndarray, boundary: str):
        self.domain = domain
        self.free = np.asarray(free, dtype=bool).reshape(domain.cells)
        self.free_idx = np.flatnonzero(self.free)
        self.boundary = boundary
        Ds = difference_matrices(domain, boundary)
        self.Ds = [D[:, self.free_idx].tocsr() for D in Ds]
        self._solve = None
        self.matrix = None

    def assemble(self, w: np.ndarray, diag_extra: np.ndarray | None = None, tol: float = 1e-9):
        vol = self.domain.cell_volume
        W = sp.diags(np.ravel(w) * vol)
        M = None
        for D in self.Ds:
            term = (D.T @ W @ D)
            M = term if M is None else M + term
        if diag_extra is not None:
            M = M + sp.diags(np.ravel(diag_extra)[self.free_idx])
        M = M.tocsr()
        self.matrix = M
        n = M.shape[0]
        if n <= DIRECT_LIMIT:
            lu = spla.splu(M.tocsc())
            self._solve = lambda r: lu.solve(r)
        else:
            import pyamg

            # the hierarchy setup draws from numpy's global RNG; pin it so
            # repeated runs give bit-identical results
            state = np.random.get_state()
            np.random.seed(0)
            try:
                ml = pyamg.smoothed_aggregation_solver(M, symmetry="symmetric", max_coarse=500)
            finally:
                np.random.set_state(state)

            def solve(r, ml=ml):
                return ml.solve(r, tol=tol, accel="cg", maxiter=200)

            self._solve = solve
        return self

    def apply_inverse(self, r_full: np.ndarray) -> np.ndarray:
        """``M^{-1} r`` on the free cells; zero elsewhere."""
        out = np.zeros(self.domain.cells)
        rf = np.ravel(r_full)[self.free_idx]
        if not np.any(rf):
            return out
        out.ravel()[self.free_idx] = self._solve(rf)
        return out


def armijo(f, x0, f0, grad, direction, project, cfg: SolverConfig, t0: float | None = None):
    """Backtracking along the projected path ``project(x0 + t*direction)``.

    Returns ``(x, f(x), t)``; ``t == 0`` signals that no step satisfied the
    sufficient-decrease condition.
    """
    t = cfg.initial_step if t0 is None else t0
    for _ in range(cfg.max_backtracks):
        x = project(x0 + t * direction)
        fx = f(x)
        slope = float(np.sum(grad * (x - x0)))
        if np.isfinite(fx) and fx <= f0 + cfg.sufficient_decrease * slope and fx <= f0:
            return x, fx, t
        t *= cfg.shrink
    return x0, f0, 0.0
