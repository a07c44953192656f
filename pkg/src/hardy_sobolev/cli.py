"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGENCE = 3

log = logging.getLogger("hardy_sobolev")


class InvalidInput(ValueError):
    pass


def _set_threads(n: int) -> None:
    # only effective before numpy loads its BLAS; recorded in reports either way
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _load_json(text_or_path: str):
    path = Path(text_or_path)
    try:
        if path.exists():
            return json.loads(path.read_text())
        return json.loads(text_or_path)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"cannot parse JSON from {text_or_path!r}: {exc}") from None


def _potential(args, N: int):
    from .potentials import PotentialSpec, gallery

    if args.potential_json:
        spec = PotentialSpec.from_dict(_load_json(args.potential_json))
    else:
        params = {}
        for item in args.param or []:
            key, sep, val = item.partition("=")
            if not sep:
                raise InvalidInput(f"--param expects key=value, got {item!r}")
            params[key] = _parse_value(val)
        spec = gallery(args.potential, **params)
    spec.validate(N, args.p)
    return spec


def _grids(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    try:
        out = [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise InvalidInput(f"--grid expects comma-separated integers, got {text!r}") from None
    if not out or min(out) < 2:
        raise InvalidInput("--grid needs integers >= 2")
    return out


def _domain(args, n: int, exterior: str | None = None):
    from .grid import GridDomain

    lo, hi = args.box
    return GridDomain.node_aligned([lo] * args.dim, [hi] * args.dim, n, exterior=exterior or args.exterior)


def _solver(args):
    from .solver import SolverConfig

    return SolverConfig(**{**args.solver, "seed": args.seed})


def _emit(args, name: str, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, default=float) + "\n"
    sys.stdout.write(text)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text)


# -- subcommands ------------------------------------------------------------


def cmd_capacity(args) -> int:
    import numpy as np

    from .capacity import CapacityProblem, capacity, capacity_ball_analytic
    from .grid import CompactSet

    n = _grids(args.grid)[-1]
    dom = _domain(args, n)
    center = np.zeros(args.dim) if args.center is None else np.asarray(args.center, dtype=float)
    if len(center) != args.dim:
        raise InvalidInput("--center needs one coordinate per dimension")
    F = CompactSet.ball(dom, args.radius, center)
    if F.empty:
        raise InvalidInput("the ball contains no cell centre; refine the grid")
    res = capacity(CapacityProblem(dom, F, args.p, _solver(args)))
    _emit(args, "capacity", {"capacity": res.value, "converged": res.converged, "iterations": res.iterations,
                             "analytic_RN": capacity_ball_analytic(args.dim, args.p, args.radius),
                             "intervals": n, "radius": args.radius, "center": center.tolist(),
                             "exterior": dom.exterior})
    return EXIT_OK if res.converged else EXIT_NONCONVERGENCE


def cmd_rearrange(args) -> int:
    from .grid import sample_potential
    from .io import read_grid_function
    from .rearrange import decreasing_rearrangement

    if args.input:
        f = read_grid_function(args.input)
    else:
        f = sample_potential(_potential(args, args.dim), _domain(args, _grids(args.grid)[-1]))
    fstar = decreasing_rearrangement(f)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "fstar.csv").write_text(fstar.to_csv())
    _emit(args, "rearrange", {"segments": len(fstar.levels), "sup": fstar.levels[0],
                              "support_measure": fstar.support_measure,
                              "Lp_power_integral": fstar.power_integral(args.p)})
    return EXIT_OK


def cmd_lorentz(args) -> int:
    from .grid import sample_potential
    from .io import read_grid_function, read_step_function
    from .lorentz import LorentzIndex, lorentz_norm, lorentz_quasinorm, radial_I_norm
    from .rearrange import decreasing_rearrangement

    idx = LorentzIndex(args.P, args.Q)
    payload = {"P": args.P, "Q": args.Q}
    if args.step_csv:
        fstar = read_step_function(args.step_csv)
    elif args.input:
        fstar = decreasing_rearrangement(read_grid_function(args.input))
    else:
        spec = _potential(args, args.dim)
        fstar = decreasing_rearrangement(sample_potential(spec, _domain(args, _grids(args.grid)[-1])))
        if args.radial:
            payload["I_norm"] = radial_I_norm(spec, args.p)
    payload["quasinorm"] = lorentz_quasinorm(fstar, idx)
    payload["norm"] = lorentz_norm(fstar, idx)
    _emit(args, "lorentz", payload)
    return EXIT_OK


def cmd_mazya(args) -> int:
    from .mazya import SetFamily, mazya_lower_bound

    spec = _potential(args, args.dim)
    dom = _domain(args, _grids(args.grid)[-1])
    lattice = args.lattice or (3 if args.dim <= 3 else 2)
    est = mazya_lower_bound(spec, args.p, SetFamily(lattice=lattice), domain=dom, config=_solver(args))
    best = max(est.family_log, key=lambda t: t[1])
    _emit(args, "mazya", {"lower": est.lower, "best_set": best[0], "sets_tried": len(est.family_log)})
    return EXIT_OK


def cmd_rayleigh(args) -> int:
    from .grid import sample_potential
    from .rayleigh import RayleighProblem, best_constant

    spec = _potential(args, args.dim)
    dom = _domain(args, _grids(args.grid)[-1], exterior="dirichlet")
    res = best_constant(RayleighProblem(dom, sample_potential(spec, dom), args.p, _solver(args)), snapshots=0)
    _emit(args, "rayleigh", {"B_g": res.B_g, "converged": res.trace.converged, "residual": res.trace.residual,
                             "iterations": len(res.trace.steps)})
    return EXIT_OK if res.trace.converged else EXIT_NONCONVERGENCE


def cmd_verdict(args) -> int:
    from .mazya import compactness_verdict, positive_part_criterion

    spec = _potential(args, args.dim)
    dom = _domain(args, _grids(args.grid)[-1])
    lattice = args.lattice or (3 if args.dim <= 3 else 2)
    v = compactness_verdict(spec, args.p, domain=dom, lattice=lattice, config=_solver(args))
    payload = {"compactness": v.verdict, "witnesses": v.witnesses}
    if args.positive_part:
        pp = positive_part_criterion(spec, args.p, domain=dom, lattice=lattice, config=_solver(args))
        payload["positive_part"] = {"verdict": pp.verdict, "witnesses": pp.witnesses}
    _emit(args, "verdict", payload)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    from .pipeline import PipelineConfig, emit, run_pipeline

    spec = _potential(args, args.dim)
    settings = dict(args.pipeline)
    settings.update(box_lo=args.box[0], box_hi=args.box[1], exterior=args.exterior,
                    threads=args.threads, solver=args.solver)
    if args.nested:
        settings["nested"] = tuple(args.nested)
    if args.lattice:
        settings["lattice"] = args.lattice
    cfg = PipelineConfig.from_dict(settings)
    report = run_pipeline(spec, args.p, _grids(args.grid), N=args.dim, seed=args.seed, config=cfg)
    out = args.out_dir or "."
    for path in emit(report, out, formats=tuple(args.format)):
        log.info("wrote %s", path)
    sys.stdout.write(json.dumps({"interval": report.interval, "compactness": report.compactness["verdict"],
                                 "attainment": report.attainment["verdict"]}, sort_keys=True) + "\n")
    if args.strict and not all(t["converged"] for t in report.trend):
        return EXIT_NONCONVERGENCE
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _add_potential(sp) -> None:
    sp.add_argument("--potential", default="inverse_power",
                    help="gallery entry (constant, inverse_power, cylindrical, bump, radial_table, "
                         "indicator, annulus_singular)")
    sp.add_argument("--param", action="append", metavar="KEY=VALUE",
                    help="gallery parameter; VALUE is parsed as JSON when possible")
    sp.add_argument("--potential-json", help="potential spec as JSON text or a JSON file")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=float, default=None, help="exponent p (default 2)")
    common.add_argument("--dim", type=int, default=None, help="dimension N (default 3)")
    common.add_argument("--grid", default=None, help="intervals per axis, comma separated ladder (default 16)")
    common.add_argument("--box", type=float, nargs=2, metavar=("LO", "HI"), default=None,
                        help="computational box [LO, HI]^N (default -2 2)")
    common.add_argument("--exterior", choices=("far_field", "dirichlet"), default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--out-dir", default=None)
    common.add_argument("--config", help="JSON file with defaults for any option")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hardy-sobolev", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("capacity", parents=[common], help="p-capacity of a ball")
    sp.add_argument("--radius", type=float, default=0.5)
    sp.add_argument("--center", type=float, nargs="+")
    sp.set_defaults(func=cmd_capacity)

    sp = sub.add_parser("rearrange", parents=[common], help="decreasing rearrangement of a grid function")
    sp.add_argument("--input", help="grid-function file")
    _add_potential(sp)
    sp.set_defaults(func=cmd_rearrange)

    sp = sub.add_parser("lorentz", parents=[common], help="Lorentz quasi-norm and norm")
    sp.add_argument("--P", type=float, required=True)
    sp.add_argument("--Q", type=float, default=float("inf"))
    sp.add_argument("--input", help="grid-function file")
    sp.add_argument("--step-csv", help="step function CSV (t_start, level)")
    sp.add_argument("--radial", action="store_true", help="also report the radial I norm of the potential")
    _add_potential(sp)
    sp.set_defaults(func=cmd_lorentz)

    for name, func, hlp in (("mazya", cmd_mazya, "lower bound for the Maz'ya norm"),
                            ("verdict", cmd_verdict, "compactness verdict")):
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.add_argument("--lattice", type=int, default=None)
        _add_potential(sp)
        sp.set_defaults(func=func)
        if name == "verdict":
            sp.add_argument("--positive-part", action="store_true")

    sp = sub.add_parser("rayleigh", parents=[common], help="best constant B_g on the Dirichlet box")
    _add_potential(sp)
    sp.set_defaults(func=cmd_rayleigh)

    sp = sub.add_parser("pipeline", parents=[common], help="full report for one potential")
    sp.add_argument("--lattice", type=int, default=None)
    sp.add_argument("--nested", type=float, nargs="+", help="half widths L for the (L, B_g) trend")
    sp.add_argument("--format", nargs="+", choices=("json", "csv"), default=["json", "csv"])
    sp.add_argument("--strict", action="store_true", help="exit 3 when a best-constant solve did not converge")
    _add_potential(sp)
    sp.set_defaults(func=cmd_pipeline)
    return parser


DEFAULTS = {"p": 2.0, "dim": 3, "grid": "16", "box": [-2.0, 2.0], "exterior": "far_field",
            "seed": 0, "threads": 1, "out_dir": None}


def _resolve(args) -> None:
    """Command line beats the config file, which beats the built-in defaults."""
    conf = _load_json(args.config) if args.config else {}
    if not isinstance(conf, dict):
        raise InvalidInput("the config file must hold a JSON object")
    for key, default in DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, conf.get(key, default))
    args.solver = conf.get("solver", {})
    args.pipeline = conf.get("pipeline", {})
    if hasattr(args, "potential") and "potential" in conf and not args.potential_json:
        args.potential_json = json.dumps(conf["potential"])
    if args.box[1] <= args.box[0]:
        raise InvalidInput("--box needs LO < HI")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _resolve(args)
        _set_threads(int(args.threads))
        from .solver import NonConvergence
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ValueError, TypeError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
