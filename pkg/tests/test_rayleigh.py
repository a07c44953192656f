import math

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from hardy_sobolev import potentials as P
from hardy_sobolev.grid import GridDomain, GridFunction, difference_matrices, sample_potential
from hardy_sobolev.rayleigh import (CONCENTRATING, RayleighProblem, best_constant, concentration_diagnostic,
                                    evp_residual, require_converged)
from hardy_sobolev.solver import NonConvergence, SolverConfig


def inverse_iteration_oracle(dom: GridDomain, g: GridFunction, iters: int = 500) -> float:
    """Smallest lam of A u = lam G u by plain inverse power iteration."""
    free = np.flatnonzero(dom.mask.ravel())
    A = sum(D[:, free].T @ D[:, free] for D in difference_matrices(dom, "zero")) * dom.cell_volume
    G = sp.diags(g.values.ravel()[free] * dom.cell_volume)
    lu = spla.splu(sp.csc_matrix(A))
    u = np.ones(free.size)
    lam = 0.0
    for _ in range(iters):
        w = lu.solve(G @ u)
        new = float(u @ (G @ u)) / float(u @ (G @ w))
        u = w / np.sqrt(float(w @ (G @ w)))
        if abs(new - lam) < 1e-13 * new:
            break
        lam = new
    return float(u @ (A @ u)) / float(u @ (G @ u))


@pytest.mark.parametrize("spec", [P.constant(1.0), P.inverse_power(2.0, center=[0.3, 0.4, 0.5]), P.bump(0.4, center=[0.5] * 3)])
def test_matches_inverse_iteration_oracle(spec):
    dom = GridDomain.node_aligned([0.0] * 3, [1.0] * 3, 12)
    g = sample_potential(spec, dom)
    if spec.kind == "radial_profile":
        # the oracle needs G > 0 on every free cell
        g = GridFunction(dom, g.values + 1e-3)
    res = best_constant(RayleighProblem(dom, g, 2.0))
    lam = inverse_iteration_oracle(dom, g)
    assert res.trace.converged
    assert res.B_g == pytest.approx(1 / lam, rel=1e-6)


def test_quotients_never_increase_and_p_not_two():
    dom = GridDomain.node_aligned([0.0] * 3, [1.0] * 3, 10)
    g = sample_potential(P.constant(1.0), dom)
    res = best_constant(RayleighProblem(dom, g, 1.5, SolverConfig(max_iters=150)))
    q = res.trace.quotients
    assert all(b <= a * (1 + 1e-12) for a, b in zip(q, q[1:]))
    assert evp_residual(res.u, g, 1.5) < 1e-3
    assert np.all(res.u.values >= 0)


def test_validation_and_nonconvergence():
    dom = GridDomain.node_aligned([0.0] * 3, [1.0] * 3, 6)
    g = sample_potential(P.constant(1.0), dom)
    with pytest.raises(ValueError):
        RayleighProblem(dom, g * -1.0, 2.0)
    with pytest.raises(ValueError):
        RayleighProblem(dom, g, 3.0)
    with pytest.raises(ValueError):
        best_constant(RayleighProblem(dom, dom.zeros(), 2.0))
    res = best_constant(RayleighProblem(dom, g, 2.0, SolverConfig(max_iters=1)))
    with pytest.raises(NonConvergence):
        require_converged(res)


def test_diagnostic_flags_concentration():
    dom = GridDomain.node_aligned([-1.0] * 3, [1.0] * 3, 16)
    g = sample_potential(P.inverse_power(2.0), dom)
    res = best_constant(RayleighProblem(dom, g, 2.0))
    diag = concentration_diagnostic(res.trace, g, 2.0, [[0.0, 0.0, 0.0], [0.5, 0.5, 0.5]])
    assert diag.verdict == CONCENTRATING
    assert diag.witness == str([0.0, 0.0, 0.0])
