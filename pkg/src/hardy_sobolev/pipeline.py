"""End-to-end run on one potential: Maz'ya lower bound, best constant,
concentration ladders and the two verdicts, bundled in a :class:`HardyReport`.

The report JSON is a pure function of the inputs.  Wall times are kept out
of it (they live in ``HardyReport.timing`` and in a sidecar file) so that two
runs with the same configuration produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .capacity import CapacityProblem, PropertyCase, check_capacity_properties
from .grid import CompactSet, GridDomain, sample_potential
from .mazya import (CapacityCache, SetFamily, attainment_criterion, compactness_verdict,
                    concentration_function, hardy_constant, hardy_sandwich, mazya_lower_bound,
                    singular_set)
from .potentials import PotentialSpec
from .rayleigh import RayleighProblem, best_constant
from .solver import SolverConfig

log = logging.getLogger(__name__)

REPORT_FILE = "report.json"
TIMING_FILE = "timing.json"


@dataclass
class PipelineConfig:
    """Everything besides the potential, ``p`` and the grid ladder.

    The computational box is ``[box_lo, box_hi]^N``.  ``exterior`` is
    ``"far_field"`` when the box truncates R^N and ``"dirichlet"`` when the
    box is Omega itself.  ``nested`` lists half widths ``L`` of extra boxes,
    centred on the box centre and solved at the finest spacing, for the
    ``(L, B_g)`` trend.
    """

    box_lo: float = -2.0
    box_hi: float = 2.0
    exterior: str = "far_field"
    nested: tuple = ()
    lattice: int | None = None
    radii: tuple | None = None
    cells_per_radius: int | None = None
    quantiles: tuple = (0.5, 0.9)
    capacity_checks: bool = True
    threads: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not self.box_hi > self.box_lo:
            raise ValueError("box_hi must exceed box_lo")
        if self.exterior not in ("far_field", "dirichlet"):
            raise ValueError("exterior must be 'far_field' or 'dirichlet'")
        if isinstance(self.solver, dict):
            self.solver = SolverConfig(**self.solver)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nested"] = list(self.nested)
        d["radii"] = None if self.radii is None else list(self.radii)
        d["quantiles"] = list(self.quantiles)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown pipeline settings: {sorted(extra)}")
        d = dict(d)
        for key in ("nested", "radii", "quantiles"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class HardyReport:
    potential: dict
    p: float
    N: int
    interval: list[float]
    C_H: float
    sandwich: dict
    concentration: dict
    singular_set: list[list[float]]
    compactness: dict
    attainment: dict
    trend: list[dict]
    capacity_checks: list[dict]
    provenance: dict
    timing: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("timing")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "HardyReport":
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "HardyReport":
        return cls.from_dict(json.loads(text))

    @property
    def spec(self) -> PotentialSpec:
        return PotentialSpec.from_dict(self.potential)


def _verdict_dict(v) -> dict:
    return {"verdict": v.verdict, "witnesses": list(v.witnesses), "detail": _plain(v.detail)}


def _plain(obj):
    """Recursively convert numpy scalars and tuples to JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        # NaN would not compare equal after a round trip
        return None if math.isnan(obj) else float(obj)
    return obj


def _default_lattice(N: int) -> int:
    # 27 centres in 3D; 16 in 4D keeps the 4D windows affordable
    return 3 if N <= 3 else 2


def _property_checks(N: int, p: float, solver: SolverConfig) -> list[dict]:
    n = 24 if N <= 3 else 10
    dom = GridDomain.node_aligned([-1.0] * N, [1.0] * N, n, exterior="far_field")
    r = 0.25 if N <= 3 else 0.3
    small = CompactSet.ball(dom, r)
    big = CompactSet.ball(dom, 2 * r)
    shift = np.zeros(N)
    shift[0] = 2 * dom.h
    moved = CompactSet.ball(dom, r, center=shift)
    other = CompactSet.ball(dom, r, center=-shift * 2)
    union = CompactSet(dom, small.member | other.member)

    def prob(F):
        return CapacityProblem(dom, F, p, solver)

    ps = {"small": prob(small), "big": prob(big), "moved": prob(moved), "other": prob(other), "union": prob(union)}
    cases = [
        PropertyCase("monotone_set", (ps["small"], ps["big"])),
        PropertyCase("scaling", (ps["small"], ps["big"]), lam=2.0),
        PropertyCase("isometry", (ps["small"], ps["moved"])),
        PropertyCase("subadditive", (ps["small"], ps["other"], ps["union"])),
    ]
    rep = check_capacity_properties(cases)
    return [_plain(asdict(c)) for c in rep.checks]


def run_pipeline(spec: PotentialSpec, p: float, grids=(16, 32), N: int = 3, seed: int = 0,
                 config: PipelineConfig | None = None) -> HardyReport:
    """Sample ``spec`` on each grid of the ladder (intervals per axis), run the
    Maz'ya bound, the best-constant solver and the verdicts, and bundle the
    finest-grid results with the refinement trend."""
    cfg = config or PipelineConfig()
    spec.validate(N, p)
    grids = sorted(int(n) for n in grids)
    if not grids or grids[0] < 2:
        raise ValueError("the grid ladder needs at least one entry with >= 2 intervals")
    solver = SolverConfig(**{**cfg.solver.to_dict(), "seed": seed})
    lattice = cfg.lattice or _default_lattice(N)
    CH = hardy_constant(p)
    lo, hi = [cfg.box_lo] * N, [cfg.box_hi] * N
    calls: list[dict] = []
    timing: dict = {}
    t_start = time.perf_counter()
    # spec windows do not depend on the base grid, so one cache serves every level
    cache = CapacityCache(p, solver)
    trend: list[dict] = []
    cmap = comp = att = sandwich = None
    lower = B = math.nan
    for n in grids:
        t0 = time.perf_counter()
        base = GridDomain.node_aligned(lo, hi, n, exterior=cfg.exterior)
        omega = base.with_exterior("dirichlet")
        try:
            est = mazya_lower_bound(spec, p, SetFamily(quantiles=tuple(cfg.quantiles), lattice=lattice),
                                    domain=omega, config=solver, cache=cache)
            g = sample_potential(spec, omega)
            ray = best_constant(RayleighProblem(omega, g, p, solver), snapshots=0)
            cmap = concentration_function(spec, p, radii=cfg.radii, domain=base, lattice=lattice,
                                          config=solver, cells_per_radius=cfg.cells_per_radius, cache=cache)
        except Exception as exc:
            raise type(exc)(f"pipeline on the {n}-interval grid: {exc}") from exc
        lower, B = est.lower, ray.B_g
        sandwich = hardy_sandwich(lower, B, p)
        comp = compactness_verdict(spec, p, cmap=cmap)
        att = attainment_criterion(cmap, B, base)
        trend.append({"kind": "refine", "intervals": n, "h": base.h, "L": base.half_width(),
                      "lower": lower, "B_g": B, "converged": ray.trace.converged,
                      "residual": ray.trace.residual, "iterations": len(ray.trace.steps)})
        calls += [
            {"quantity": "lower", "call": "mazya.mazya_lower_bound", "intervals": n, "domain": "dirichlet box",
             "best_set": max(est.family_log, key=lambda t: t[1])[0]},
            {"quantity": "B_g", "call": "rayleigh.best_constant", "intervals": n, "domain": "dirichlet box"},
            {"quantity": "concentration", "call": "mazya.concentration_function", "intervals": n,
             "domain": cfg.exterior},
        ]
        timing[f"grid_{n}"] = time.perf_counter() - t0
    if cfg.nested:
        h = (cfg.box_hi - cfg.box_lo) / grids[-1]
        mid = 0.5 * (cfg.box_lo + cfg.box_hi)
        for L in sorted(float(x) for x in cfg.nested):
            m = max(2, int(round(2 * L / h)))
            dom = GridDomain.node_aligned([mid - L] * N, [mid + L] * N, m)
            ray = best_constant(RayleighProblem(dom, sample_potential(spec, dom), p, solver), snapshots=0)
            trend.append({"kind": "nested", "intervals": m, "h": dom.h, "L": L, "lower": None,
                          "B_g": ray.B_g, "converged": ray.trace.converged,
                          "residual": ray.trace.residual, "iterations": len(ray.trace.steps)})
            calls.append({"quantity": "B_g(L)", "call": "rayleigh.best_constant", "L": L, "intervals": m})
    checks: list[dict] = []
    if cfg.capacity_checks:
        t0 = time.perf_counter()
        checks = _property_checks(N, p, solver)
        calls.append({"quantity": "capacity_checks", "call": "capacity.check_capacity_properties"})
        timing["capacity_checks"] = time.perf_counter() - t0
    timing["total"] = time.perf_counter() - t_start

    sing = singular_set(cmap)
    conc = {
        "centers": cmap.centers, "radii": cmap.radii, "values": cmap.values,
        "C_g": cmap.extrapolated, "classification": cmap.classification, "slopes": cmap.slopes,
        "infinity_radii": cmap.infinity_radii, "infinity_values": cmap.infinity_values,
        "infinity_classification": cmap.infinity_classification, "infinity_note": cmap.infinity_note,
        "note": cmap.note, "rows": cmap.rows(),
    }
    provenance = {
        "package_version": __version__,
        "grids": grids, "seed": seed, "threads": cfg.threads, "lattice": lattice,
        "config": cfg.to_dict(), "solver": solver.to_dict(), "capacity_solves": cache.solves,
        "calls": calls,
        "domains": {"sandwich_and_B_g": "dirichlet box", "concentration": cfg.exterior},
    }
    return HardyReport(
        potential=spec.to_dict(), p=float(p), N=int(N), interval=[lower, B], C_H=CH,
        sandwich=_plain(asdict(sandwich)), concentration=_plain(conc), singular_set=_plain(sing),
        compactness=_verdict_dict(comp), attainment=_verdict_dict(att), trend=_plain(trend),
        capacity_checks=checks, provenance=_plain(provenance), timing=timing,
    )


# -- emission ---------------------------------------------------------------


def _write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return path


def emit(report: HardyReport, out_dir, formats=("json", "csv")) -> list[Path]:
    """Write ``report.json`` and/or the CSV tables ``ladder.csv``,
    ``trend.csv`` and ``capacity_checks.csv``; wall times go to
    ``timing.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in formats:
        if fmt == "json":
            path = out / REPORT_FILE
            path.write_text(report.to_json())
            written.append(path)
        elif fmt == "csv":
            rows = report.concentration["rows"]
            written.append(_write_csv(out / "ladder.csv", ["center", "r", "C_g", "capacity", "integral"],
                                      ([r["center"], r["r"], r["ratio"], r["capacity"], r["integral"]]
                                       for r in rows)))
            written.append(_write_csv(out / "trend.csv", ["kind", "L", "intervals", "h", "lower", "B_g", "converged"],
                                      ([t["kind"], t["L"], t["intervals"], t["h"], t["lower"], t["B_g"],
                                        t["converged"]] for t in report.trend)))
            written.append(_write_csv(out / "capacity_checks.csv", ["property", "lhs", "rhs", "passed", "tolerance"],
                                      ([c["property"], c["lhs"], c["rhs"], c["passed"], c["tolerance"]]
                                       for c in report.capacity_checks)))
        else:
            raise ValueError(f"unknown format {fmt!r}")
    if report.timing:
        path = out / TIMING_FILE
        path.write_text(json.dumps(report.timing, sort_keys=True, indent=2) + "\n")
        written.append(path)
    return written


def load_report(path) -> HardyReport:
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_FILE
    return HardyReport.from_json(path.read_text())
