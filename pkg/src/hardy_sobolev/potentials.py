"""Gallery of Hardy potentials.

A :class:`PotentialSpec` is a small, JSON-serialisable description of a weight
``g`` on R^N.  It knows how to evaluate itself pointwise and which points or
axes it is singular on; cell averaging on grids lives in
:func:`hardy_sobolev.grid.sample_potential`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

KINDS = (
    "constant",
    "inverse_power",
    "cylindrical",
    "radial_profile",
    "indicator_scaled",
    "annulus_singular",
    "sum",
)

ANALYTIC_PROFILES = ("bump", "power", "annulus_power")


class UnsupportedPotential(ValueError):
    """Raised for unknown kinds or parameters outside a kind's validity range."""


@dataclass(frozen=True)
class PotentialSpec:
    """Description of a potential ``g``.

    ``params`` holds the kind-specific parameters; ``terms`` is only used by
    ``kind == "sum"`` and holds ``(coefficient, spec)`` pairs.
    """

    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    terms: tuple[tuple[float, "PotentialSpec"], ...] = ()
    declared_singularities: tuple[dict[str, Any], ...] = ()
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedPotential(f"unknown potential kind {self.kind!r}")
        if self.kind == "sum" and not self.terms:
            raise UnsupportedPotential("sum potential needs at least one term")

    # -- evaluation -------------------------------------------------------

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Pointwise values at points ``x`` of shape ``(..., N)``.

        Singular points evaluate to ``inf``.
        """
        x = np.asarray(x, dtype=float)
        k = self.kind
        P = self.params
        if k == "constant":
            return np.full(x.shape[:-1], float(P.get("value", 1.0)))
        if k == "inverse_power":
            a = _center(P, x.shape[-1])
            r = np.linalg.norm(x - a, axis=-1)
            with np.errstate(divide="ignore"):
                return float(P.get("coef", 1.0)) * r ** (-float(P["exponent"]))
        if k == "cylindrical":
            kk = int(P["k"])
            off = np.asarray(P.get("axis_offset", [0.0] * kk), dtype=float)
            r = np.linalg.norm(x[..., :kk] - off, axis=-1)
            with np.errstate(divide="ignore"):
                return float(P.get("coef", 1.0)) * r ** (-float(P["exponent"]))
        if k == "radial_profile":
            a = _center(P, x.shape[-1])
            r = np.linalg.norm(x - a, axis=-1)
            return float(P.get("coef", 1.0)) * radial_profile_values(P, r)
        if k == "indicator_scaled":
            a = _center(P, x.shape[-1])
            r = np.linalg.norm(x - a, axis=-1)
            inner = float(P.get("r_in", 0.0))
            outer = float(P["r_out"])
            inside = (r <= outer) & ((r > inner) if inner > 0 else True)
            return np.where(inside, float(P.get("coef", 1.0)), 0.0)
        if k == "annulus_singular":
            beta = float(P["beta"])
            r1 = float(P.get("r1", 1.0))
            r2 = float(P.get("r2", 2.0))
            a = _center(P, x.shape[-1])
            r = np.linalg.norm(x - a, axis=-1)
            inside = (r > r1) & (r <= r2)
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = np.where(inside, np.abs(r - r1) ** (-beta), 0.0)
            vals[(r == r1)] = np.inf
            return float(P.get("coef", 1.0)) * vals
        # sum
        out = np.zeros(x.shape[:-1])
        for c, t in self.terms:
            with np.errstate(invalid="ignore"):
                out = out + c * t.evaluate(x)
        return out

    def singularities(self) -> list[dict[str, Any]]:
        """Singular loci as dicts: point ``{"type": "point", "at": [...]}``,
        axis ``{"type": "axis", "k": k, "offset": [...]}`` or sphere
        ``{"type": "sphere", "center": [...], "radius": r}``.

        Declared singularities are always included.
        """
        out = [dict(s) for s in self.declared_singularities]
        k = self.kind
        P = self.params
        if k == "inverse_power":
            out.append({"type": "point", "at": list(P.get("center", [])),
                        "exponent": float(P["exponent"])})
        elif k == "cylindrical":
            out.append({"type": "axis", "k": int(P["k"]),
                        "offset": list(P.get("axis_offset", [0.0] * int(P["k"]))),
                        "exponent": float(P["exponent"])})
        elif k == "annulus_singular":
            out.append({"type": "sphere", "center": list(P.get("center", [])),
                        "radius": float(P.get("r1", 1.0))})
        elif k == "radial_profile" and P.get("analytic") in ("power", "annulus_power"):
            out.append({"type": "point" if P["analytic"] == "power" else "sphere",
                        "at": list(P.get("center", [])),
                        "center": list(P.get("center", [])),
                        "radius": float(P.get("r1", 0.0))})
        elif k == "sum":
            for _, t in self.terms:
                out.extend(t.singularities())
        return out

    def is_bounded(self) -> bool:
        return not self.singularities()

    def is_compactly_supported(self) -> bool:
        k = self.kind
        if k == "constant":
            return float(self.params.get("value", 1.0)) == 0.0
        if k in ("indicator_scaled", "annulus_singular"):
            return True
        if k == "radial_profile":
            return self.params.get("analytic") in ("bump", "annulus_power") or "radii" in self.params
        if k == "sum":
            return all(t.is_compactly_supported() for _, t in self.terms)
        return False

    def validate(self, N: int, p: float) -> None:
        """Check the kind's validity range for dimension ``N`` and exponent ``p``."""
        if not (1 < p < N):
            raise UnsupportedPotential(f"need 1 < p < N, got p={p}, N={N}")
        k = self.kind
        P = self.params
        if k == "inverse_power":
            if not 0 < float(P["exponent"]) < N:
                raise UnsupportedPotential("inverse_power needs 0 < exponent < N (local integrability)")
        elif k == "cylindrical":
            kk = int(P["k"])
            if not 2 <= kk < N:
                raise UnsupportedPotential("cylindrical potential needs 2 <= k < N")
            if not p < kk:
                raise UnsupportedPotential("cylindrical potential is a Hardy potential only for p < k")
        elif k == "annulus_singular":
            if not 0 < float(P["beta"]) < 1:
                raise UnsupportedPotential("annulus_singular needs 0 < beta < 1")
        elif k == "radial_profile":
            if "analytic" in P and P["analytic"] not in ANALYTIC_PROFILES:
                raise UnsupportedPotential(f"unknown analytic profile {P['analytic']!r}")
        elif k == "sum":
            for _, t in self.terms:
                t.validate(N, p)

    def scaled(self, c: float) -> "PotentialSpec":
        return PotentialSpec("sum", terms=((float(c), self),), metadata=dict(self.metadata))

    def __add__(self, other: "PotentialSpec") -> "PotentialSpec":
        return PotentialSpec("sum", terms=((1.0, self), (1.0, other)))

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind, "params": _jsonable(self.params)}
        if self.terms:
            d["terms"] = [{"coef": c, "spec": t.to_dict()} for c, t in self.terms]
        if self.declared_singularities:
            d["declared_singularities"] = _jsonable(list(self.declared_singularities))
        if self.metadata:
            d["metadata"] = _jsonable(self.metadata)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PotentialSpec":
        if "gallery" in d:
            base = gallery(d["gallery"], **d.get("params", {}))
            return base
        terms = tuple((float(t["coef"]), cls.from_dict(t["spec"])) for t in d.get("terms", ()))
        return cls(
            kind=d["kind"],
            params=dict(d.get("params", {})),
            terms=terms,
            declared_singularities=tuple(d.get("declared_singularities", ())),
            metadata=dict(d.get("metadata", {})),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PotentialSpec":
        return cls.from_dict(json.loads(text))


def _center(P: dict, N: int) -> np.ndarray:
    c = P.get("center")
    if c is None or len(c) == 0:
        return np.zeros(N)
    c = np.asarray(c, dtype=float)
    if c.size != N:
        raise UnsupportedPotential(f"center has {c.size} coordinates, expected {N}")
    return c


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def radial_profile_values(P: dict, r: np.ndarray) -> np.ndarray:
    """Values of a radial profile ``g~(r)`` (table or analytic)."""
    r = np.asarray(r, dtype=float)
    if "radii" in P:
        # step table: levels[i] on [radii[i], radii[i+1]); zero beyond the last radius
        radii = np.asarray(P["radii"], dtype=float)
        levels = np.asarray(P["levels"], dtype=float)
        if radii.size != levels.size + 1:
            raise UnsupportedPotential("radial table needs len(radii) == len(levels) + 1")
        idx = np.searchsorted(radii, r, side="right") - 1
        ok = (idx >= 0) & (idx < levels.size)
        return np.where(ok, levels[np.clip(idx, 0, levels.size - 1)], 0.0)
    kind = P.get("analytic")
    if kind == "bump":
        rho = float(P.get("radius", 1.0))
        s = np.clip(r / rho, 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            v = np.exp(1.0 - 1.0 / np.maximum(1.0 - s * s, 1e-300))
        return np.where(r < rho, v, 0.0)
    if kind == "power":
        with np.errstate(divide="ignore"):
            return r ** (-float(P["exponent"]))
    if kind == "annulus_power":
        beta = float(P["beta"])
        r1 = float(P.get("r1", 1.0))
        r2 = float(P.get("r2", 2.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where((r > r1) & (r <= r2), np.abs(r - r1) ** (-beta), 0.0)
        v[r == r1] = np.inf
        return v
    raise UnsupportedPotential(f"unknown radial profile {P!r}")


# -- gallery --------------------------------------------------------------


def constant(value: float = 1.0) -> PotentialSpec:
    return PotentialSpec("constant", {"value": float(value)})


def inverse_power(exponent: float, center=None, coef: float = 1.0) -> PotentialSpec:
    P = {"exponent": float(exponent), "coef": float(coef)}
    if center is not None:
        P["center"] = [float(c) for c in center]
    return PotentialSpec("inverse_power", P)


def cylindrical(k: int, exponent: float, coef: float = 1.0, axis_offset=None) -> PotentialSpec:
    P = {"k": int(k), "exponent": float(exponent), "coef": float(coef)}
    if axis_offset is not None:
        P["axis_offset"] = [float(c) for c in axis_offset]
    return PotentialSpec("cylindrical", P)


def bump(radius: float = 1.0, center=None, coef: float = 1.0) -> PotentialSpec:
    """Smooth compactly supported ``coef * exp(1 - 1/(1 - |x-a|^2/radius^2))``."""
    P = {"analytic": "bump", "radius": float(radius), "coef": float(coef)}
    if center is not None:
        P["center"] = [float(c) for c in center]
    return PotentialSpec("radial_profile", P)


def radial_table(radii, levels, center=None, coef: float = 1.0) -> PotentialSpec:
    P = {"radii": [float(r) for r in radii], "levels": [float(v) for v in levels],
         "coef": float(coef)}
    if center is not None:
        P["center"] = [float(c) for c in center]
    return PotentialSpec("radial_profile", P)


def indicator(r_out: float, r_in: float = 0.0, coef: float = 1.0, center=None) -> PotentialSpec:
    P = {"r_out": float(r_out), "r_in": float(r_in), "coef": float(coef)}
    if center is not None:
        P["center"] = [float(c) for c in center]
    return PotentialSpec("indicator_scaled", P)


def annulus_singular(beta: float, r1: float = 1.0, r2: float = 2.0) -> PotentialSpec:
    return PotentialSpec("annulus_singular", {"beta": float(beta), "r1": float(r1), "r2": float(r2)})


def combine(*pairs) -> PotentialSpec:
    """``combine((c1, g1), (c2, g2), ...)`` is ``c1*g1 + c2*g2 + ...``."""
    return PotentialSpec("sum", terms=tuple((float(c), g) for c, g in pairs))


GALLERY = {
    "constant": constant,
    "inverse_power": inverse_power,
    "cylindrical": cylindrical,
    "bump": bump,
    "radial_table": radial_table,
    "indicator": indicator,
    "annulus_singular": annulus_singular,
}


def gallery(name: str, **params) -> PotentialSpec:
    try:
        factory = GALLERY[name]
    except KeyError:
        raise UnsupportedPotential(f"unknown gallery entry {name!r}; known: {sorted(GALLERY)}") from None
    return factory(**params)


def sphere_volume(N: int) -> float:
    """Volume of the unit ball in R^N."""
    return math.pi ** (N / 2) / math.gamma(N / 2 + 1)
