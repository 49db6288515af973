"""Command-line entry point: ground, scale, check-potential, bound, verify, plot.

Exit codes: 0 success, 1 solver error, 2 verdict failure, 3 config error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import plot as plots
from .boundstate import BoxError, CorruptionError
from .config import ConfigError, RunConfig, apply_overrides, load_config
from .geometry import AliasingError, BarycenterError
from .groundstate import SolverError
from .potential import ConditionError, potential_from_config
from .report import make_report, read_series, write_report, write_series
from .runs import (
    SUITES,
    boundary_strip_values,
    fiber_profile,
    run_bound,
    run_check_potential,
    run_ground,
    run_scale,
    run_verify,
)
from .spectral import FieldFormatError, PhysParams, load_field, save_field, set_threads

log = logging.getLogger("fnls")

EXIT_OK, EXIT_SOLVER, EXIT_VERDICT, EXIT_CONFIG = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (blocks: grid, phys, potential, solver, output)")
    p.add_argument("--out", help="output field file")
    p.add_argument("--report", help="output report (JSON)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="FFT worker threads (default: $FNLS_THREADS or 1)")
    p.add_argument("--dim", type=int, dest="d")
    p.add_argument("--s", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--L", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--family", choices=("constant", "inverse_power_well"))
    p.add_argument("--mu", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--a0", type=float)
    p.add_argument("--tol", type=float, dest="tol_grad")
    p.add_argument("--max-iter", type=int, help="saddle-search iteration cap")
    p.add_argument("--ground-max-iter", type=int, help="ground-state iteration cap")
    p.add_argument("--h-max", type=float)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fnls", description="Normalized solutions of fractional NLS")
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("ground", help="solve the limit equation for the ground state"))
    sp = sub.add_parser("scale", help="rescale the ground state to mass c and check the scaling laws")
    _common(sp)
    sp.add_argument("--ratios", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    sp = sub.add_parser("check-potential", help="check A1-A6 and the derived constants")
    _common(sp)
    sp.add_argument("--with-ground", action="store_true", help="also compute w_c for A6, delta_0 and the sup gap")
    sp = sub.add_parser("bound", help="linking box, family max and saddle search")
    _common(sp)
    sp.add_argument("--series", help="CSV iteration series")
    sp = sub.add_parser("verify", help="run verification suites")
    _common(sp)
    sp.add_argument("--suite", choices=SUITES + ("all",), default="all")
    sp = sub.add_parser("plot", help="SVG charts from a series CSV or a field file")
    _common(sp)
    sp.add_argument("--kind", choices=("energy", "fiber", "boundary"), default="energy")
    sp.add_argument("--series", help="CSV series (kind=energy)")
    sp.add_argument("--field", help="field file (kind=fiber or boundary)")
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {
        "grid.d": args.d, "grid.n": args.n, "grid.L": args.L,
        "phys.s": args.s, "phys.p": args.p, "phys.c": args.c,
        "solver.tol_grad": args.tol_grad, "solver.max_iter": args.max_iter,
        "solver.ground_max_iter": args.ground_max_iter, "solver.h_max": args.h_max,
        "seed": args.seed,
        "output.out": args.out, "output.report": args.report,
    }
    if args.family is not None:
        cfg.potential = {"family": args.family}
    over.update({"potential.mu": args.mu, "potential.q": args.q, "potential.a0": args.a0})
    if getattr(args, "series", None) is not None:
        over["output.series"] = args.series
    return apply_overrides(cfg, over).validate()


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("FNLS_THREADS")
    try:
        return int(env) if env else 1
    except ValueError as exc:
        raise ConfigError(f"FNLS_THREADS must be an integer, got {env!r}") from exc


def _emit(command: str, cfg: RunConfig, out, t0: float) -> int:
    timing = {"wall_seconds": time.perf_counter() - t0, "iterations": out.iterations}
    rep = make_report(command, cfg.to_dict(), out.results, out.verdicts, timing)
    if cfg.output.report:
        write_report(rep, cfg.output.report)
    field_out = cfg.output.out
    if field_out and out.fields:
        key = "u" if "u" in out.fields else "w"
        save_field(out.fields[key], field_out, s=cfg.phys.s, p=cfg.phys.p)
    if cfg.output.series and out.series is not None:
        write_series(out.series, cfg.output.series)
    for v in out.verdicts:
        mark = {True: "pass", False: "FAIL", None: "n/a"}[v["passed"]]
        print(f"{mark:4s}  {v['name']}")
    return EXIT_VERDICT if rep["failed"] else EXIT_OK


def _error_report(command: str, cfg: RunConfig | None, kind: str, exc: Exception, t0: float) -> None:
    if cfg is None or not cfg.output.report:
        return
    body = {"error": {"kind": kind, "message": str(exc)}}
    rep = make_report(command, cfg.to_dict(), body, [{"name": kind, "passed": False}],
                      {"wall_seconds": time.perf_counter() - t0})
    write_report(rep, cfg.output.report)


def _plot(args, cfg: RunConfig) -> int:
    target = cfg.output.out or f"fnls-{args.kind}.svg"
    if args.kind == "energy":
        if not args.series:
            raise ConfigError("--series is required for kind=energy")
        text = plots.energy_chart(read_series(args.series))
    else:
        if not args.field:
            raise ConfigError("--field is required for kind=fiber/boundary")
        u = load_field(args.field)
        params = PhysParams(u.grid.d, cfg.phys.s, cfg.phys.p, 1.0, strict=False)
        a = potential_from_config(cfg.potential)
        if args.kind == "fiber":
            hs, vals = fiber_profile(u, a, params)
            text = plots.fiber_chart(hs, vals)
        else:
            hs, vals = boundary_strip_values(u, a, params, cfg)
            text = plots.boundary_strip(hs, np.arange(len(vals)), vals)
    plots.write_svg(text, target)
    print(f"wrote {target}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    t0 = time.perf_counter()
    cfg = None
    try:
        set_threads(_threads(args))
        cfg = _config(args)
        if args.command == "plot":
            return _plot(args, cfg)
        if args.command == "ground":
            out = run_ground(cfg)
        elif args.command == "scale":
            out = run_scale(cfg, tuple(args.ratios))
        elif args.command == "check-potential":
            out = run_check_potential(cfg, args.with_ground)
        elif args.command == "bound":
            out = run_bound(cfg)
        else:
            suites = SUITES if args.suite == "all" else (args.suite,)
            out = run_verify(cfg, suites)
        return _emit(args.command, cfg, out, t0)
    except (ConfigError, ConditionError, FieldFormatError, ValueError, OSError) as exc:
        # ValueError here comes from parameter validation inside the library
        if isinstance(exc, (AliasingError, BarycenterError, BoxError)):
            _error_report(args.command, cfg, "solver_error", exc, t0)
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        _error_report(args.command, cfg, "config_error", exc, t0)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, CorruptionError) as exc:
        _error_report(args.command, cfg, "solver_error", exc, t0)
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
