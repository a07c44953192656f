"""Lorentz quasi-norms and norms of decreasing rearrangements and the radial
``I`` norm ``int_0^inf r^(p-1) |g~(r)| dr``.

Step inputs are reduced segment by segment with closed-form antiderivatives
of powers of ``t``; ``+inf`` is an ordinary answer (membership tests are the
point of these norms).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import comb

from .potentials import PotentialSpec, UnsupportedPotential, sphere_volume
from .rearrange import StepFunction

INF = math.inf


@dataclass(frozen=True)
class LorentzIndex:
    P: float
    Q: float = INF

    def __post_init__(self):
        if not (1 < self.P < INF):
            raise ValueError("Lorentz index needs 1 < P < inf")
        if not self.Q >= 1:
            raise ValueError("Lorentz index needs Q in [1, inf]")

    @property
    def weak(self) -> bool:
        return math.isinf(self.Q)


@dataclass(frozen=True)
class PowerProfile:
    """Analytic ``f*(t) = coef * t^(-s)`` for ``t < cutoff``, zero afterwards."""

    coef: float
    s: float
    cutoff: float = INF

    def __post_init__(self):
        if self.coef < 0 or self.s < 0:
            raise ValueError("need coef >= 0 and s >= 0")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(t < self.cutoff, self.coef * t ** (-self.s), 0.0)

    def maximal(self, t):
        t = np.asarray(t, dtype=float)
        if self.s >= 1:
            return np.full(t.shape, INF)
        k = self.coef / (1 - self.s)
        with np.errstate(divide="ignore"):
            inner = k * t ** (-self.s)
            outer = k * self.cutoff ** (1 - self.s) / t if math.isfinite(self.cutoff) else inner
        return np.where(t < self.cutoff, inner, outer)


def _power_integral(e: float, a: float, b: float) -> float:
    """``int_a^b t^e dt`` for ``0 <= a < b <= inf``."""
    if e == -1:
        if a == 0 or math.isinf(b):
            return INF
        return math.log(b / a)
    if math.isinf(b):
        return INF if e > -1 else -(a ** (e + 1)) / (e + 1)
    if a == 0 and e < -1:
        return INF
    return (b ** (e + 1) - a ** (e + 1)) / (e + 1)


def _quasinorm_steps(f: StepFunction, idx: LorentzIndex) -> float:
    if idx.weak:
        best = 0.0
        for a, b, v in f.segments():
            if v > 0:
                best = max(best, v * b ** (1 / idx.P))  # sup at the right end
        return best
    P, Q = idx.P, idx.Q
    total = 0.0
    for a, b, v in f.segments():
        if v > 0:
            total += v ** Q * _power_integral(Q / P - 1, a, b)
    return total ** (1 / Q)


def _norm_steps(f: StepFunction, idx: LorentzIndex) -> float:
    # on each segment f** = c + d/t with c, d >= 0
    P = idx.P
    al = 1 / P
    if idx.weak:
        best = 0.0
        for a, b, c, d in f.maximal_pieces():
            if c == 0 and d == 0:
                continue
            if math.isinf(b):
                if c > 0:
                    return INF
                val = d * a ** (al - 1)  # decreasing tail, sup at a
            else:
                # t^al (c + d/t) has no interior maximum; check both ends
                left = 0.0 if a == 0 else a ** al * c + d * a ** (al - 1)
                val = max(left, b ** al * c + d * b ** (al - 1))
            best = max(best, val)
        return best
    Q = idx.Q
    total = 0.0
    for a, b, c, d in f.maximal_pieces():
        if c == 0 and d == 0:
            continue
        if float(Q).is_integer():
            q = int(Q)
            for j in range(q + 1):
                coeff = comb(q, j, exact=True) * c ** (q - j) * d ** j
                if coeff:
                    total += coeff * _power_integral(Q / P - 1 - j, a, b)
        else:
            if math.isinf(b) and c > 0:
                return INF
            val, _ = integrate.quad(lambda t: t ** (Q / P - 1) * (c + d / t) ** Q, a, b,
                                    epsrel=1e-12, limit=200)
            total += val
        if math.isinf(total):
            return INF
    return total ** (1 / Q)


def _power_quasinorm(f: PowerProfile, idx: LorentzIndex, maximal: bool) -> float:
    P = idx.P
    k = f.coef
    if maximal:
        if f.s >= 1:
            return INF if k > 0 else 0.0
        k = f.coef / (1 - f.s)
    if k == 0:
        return 0.0
    e = 1 / P - f.s
    if idx.weak:
        # t^e on (0, cutoff); the maximal tail t^(1/P - 1) decreases from the cutoff on
        if e < 0:
            return INF
        if e == 0:
            return k
        return k * f.cutoff ** e if math.isfinite(f.cutoff) else INF
    Q = idx.Q
    total = k ** Q * _power_integral(Q * e - 1, 0.0, f.cutoff)
    if maximal and math.isfinite(f.cutoff) and math.isfinite(total):
        tail = k * f.cutoff ** (1 - f.s)
        total += tail ** Q * _power_integral(Q / P - 1 - Q, f.cutoff, INF)
    return total ** (1 / Q)


def lorentz_quasinorm(fstar, idx: LorentzIndex) -> float:
    """``|f|_(P,Q) = || t^(1/P - 1/Q) f*(t) ||_{L^Q(dt/t)}``."""
    if isinstance(fstar, PowerProfile):
        return _power_quasinorm(fstar, idx, maximal=False)
    return _quasinorm_steps(fstar, idx)


def lorentz_norm(fstar, idx: LorentzIndex) -> float:
    """Same reduction as :func:`lorentz_quasinorm` with ``f**`` in place of ``f*``."""
    if isinstance(fstar, PowerProfile):
        return _power_quasinorm(fstar, idx, maximal=True)
    return _norm_steps(fstar, idx)


# -- radial I norm ---------------------------------------------------------


def _quad_diverges(fn, a, b, p, points=None) -> float:
    """Adaptive quadrature of ``r^(p-1) fn(r)`` on ``(a, b)``; ``inf`` when
    truncated integrals keep growing."""
    def integrand(r):
        # quadrature nodes can round onto a singular endpoint
        try:
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                v = abs(float(fn(r)))
        except (ZeroDivisionError, OverflowError):
            v = INF
        return r ** (p - 1) * v

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if math.isinf(b):
                val, _ = integrate.quad(integrand, a, b, epsrel=1e-8, limit=400)
            else:
                val, _ = integrate.quad(integrand, a, b, epsrel=1e-8, limit=400, points=points)
            if math.isfinite(val):
                return float(val)
        except integrate.IntegrationWarning:
            pass
    # fall back to a truncation ladder and watch the trend
    vals = []
    for k in range(4, 12, 2):
        lo = a + 10.0 ** -k
        hi = b if math.isfinite(b) else 10.0 ** k
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            vals.append(integrate.quad(integrand, lo, hi, epsrel=1e-8, limit=400)[0])
    steps = np.diff(vals)
    if steps[-1] > 1e-6 * vals[-1] and steps[-1] >= 0.5 * steps[-2]:
        return INF
    return float(vals[-1])


def radial_I_norm(profile, p: float, support=(0.0, INF)) -> float:
    """``int_0^inf r^(p-1) |g~(r)| dr`` for a radial profile.

    ``profile`` is a radial :class:`PotentialSpec`, a ``(radii, levels)``
    step table (``levels[i]`` on ``[radii[i], radii[i+1])``) or a callable
    ``g~(r)`` integrated over ``support``.
    """
    if not p > 1:
        raise ValueError("need p > 1")
    if isinstance(profile, PotentialSpec):
        return _spec_I_norm(profile, p)
    if isinstance(profile, tuple) and len(profile) == 2:
        radii = np.asarray(profile[0], dtype=float)
        levels = np.asarray(profile[1], dtype=float)
        if radii.size != levels.size + 1 or np.any(np.diff(radii) <= 0) or radii[0] < 0:
            raise ValueError("step table needs increasing radii with len(radii) == len(levels) + 1")
        return float(np.sum(np.abs(levels) * (radii[1:] ** p - radii[:-1] ** p)) / p)
    if callable(profile):
        return _quad_diverges(profile, float(support[0]), float(support[1]), p)
    raise TypeError(f"cannot read a radial profile from {type(profile).__name__}")


def _spec_I_norm(spec: PotentialSpec, p: float) -> float:
    P = spec.params
    coef = abs(float(P.get("coef", 1.0)))
    if spec.kind == "constant":
        return INF if P.get("value", 1.0) != 0 else 0.0
    if spec.kind == "inverse_power":
        return INF if coef > 0 else 0.0  # r^(p-1-s) is never integrable on (0, inf)
    if spec.kind == "indicator_scaled":
        return coef * (P["r_out"] ** p - P.get("r_in", 0.0) ** p) / p
    if spec.kind == "annulus_singular":
        beta, r1, r2 = P["beta"], P.get("r1", 1.0), P.get("r2", 2.0)
        if beta >= 1:
            return INF
        val, _ = integrate.quad(lambda r: r ** (p - 1), r1, r2, weight="alg", wvar=(-beta, 0.0),
                                epsrel=1e-10)
        return float(val)
    if spec.kind == "radial_profile":
        if "radii" in P:
            return coef * radial_I_norm((P["radii"], P["levels"]), p)
        kind = P.get("analytic")
        if kind == "power":
            return INF if coef > 0 else 0.0
        if kind == "bump":
            rho = float(P.get("radius", 1.0))
            from .potentials import radial_profile_values
            return coef * _quad_diverges(lambda r: radial_profile_values(P, np.array([r]))[0], 0.0, rho, p)
        if kind == "annulus_power":
            return _spec_I_norm(PotentialSpec("annulus_singular", {k: P[k] for k in ("beta", "r1", "r2") if k in P}), p) * coef
    if spec.kind == "sum":
        if all(c >= 0 for c, _ in spec.terms):
            # nonnegative terms: |sum| = sum of |terms|
            return float(sum(c * _spec_I_norm(t, p) for c, t in spec.terms))
    raise UnsupportedPotential(f"no radial I norm for potential kind {spec.kind!r}")


# -- embedding constants --------------------------------------------------


def embedding_constant(N: int, p: float) -> float:
    """``C(N,p)`` with ``||g|| <= C(N,p) ||g||_(N/p, inf)``."""
    a = (N - p) / (p - 1)
    return 1.0 / (N * sphere_volume(N) ** (p / N) * a ** (p - 1))


def bounded_ball_constant(N: int, p: float) -> float:
    """``|B_d| / Cap_p(B_d) = d^p / (N ((N-p)/(p-1))^(p-1))``: the factor in
    ``||g chi_B_r|| <= sup|g| * r^p / (N ((N-p)/(p-1))^(p-1))``."""
    a = (N - p) / (p - 1)
    return 1.0 / (N * a ** (p - 1))


def symmetric_hardy_weight_norms(N: int, p: float) -> dict:
    """Two values for the Maz'ya norm of ``w_N^(-p/N) |x|^(-p)``.

    ``stated`` is ``(p-1)^(p-1) / (N (N-p)^(p-1))``; ``ball_family`` is the
    ratio over centred balls ``w_N^(-p/N) (p-1)^(p-1) / (N-p)^p``, which also
    equals the embedding bound ``C(N,p) * N/(N-p)``.
    """
    wN = sphere_volume(N)
    stated = (p - 1) ** (p - 1) / (N * (N - p) ** (p - 1))
    ball = wN ** (-p / N) * (p - 1) ** (p - 1) / (N - p) ** p
    weak = lorentz_norm(PowerProfile(1.0, p / N), LorentzIndex(N / p))
    return {"stated": stated, "ball_family": ball, "embedding_bound": embedding_constant(N, p) * weak}
