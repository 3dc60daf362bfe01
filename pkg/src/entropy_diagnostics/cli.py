"""
Command-line entry point.

Every subcommand writes a CSV table and a JSON summary into ``--out-dir``.  The
summary echoes the full configuration (everything except ``--out-dir`` and
``--threads``, which do not affect results) together with an ``argv`` list
that reproduces the run.

Exit codes: 0 success, 1 a physics check failed (reports are still written),
2 usage or parameter range error, 3 missing or malformed data, 4 violated
precondition of a module operation.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import commutator as cm
from .defect import entropy_budget, load_test_functions, shock_dissipation_rate, weak_residual
from .errors import ConstraintError, DataError
from .grid_fields import (Grid, Field, estimate_holder, make_weierstrass, read_field, sup_norm,
                          write_field)
from .mollifier import bump
from .solver import BOUNDARY_CONDITIONS, FLUXES, read_trajectory, solve, write_trajectory
from .systems import (BUILTIN_NAMES, asymmetric_pair, builtin, check_compatibility,
                      check_symmetry, expression_map, load_system)

FORMAT_VERSION = "1"
EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_DATA, EXIT_CONSTRAINT = 0, 1, 2, 3, 4
NOT_ECHOED = {"out_dir", "threads", "command", "handler"}
BROKEN_PAIR = "asymmetric-counterexample"


class UsageError(Exception):
    pass


# -- small helpers -------------------------------------------------------------

def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _params(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects key=value, got {item!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise UsageError(f"--param {key} needs a number, got {value!r}") from None
    return out


def _clean(obj):
    """JSON-safe copy: NaN/inf become null, numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _echo(args, parser):
    """Configuration dictionary and a canonical argv reproducing the run."""
    config, argv = {}, [args.command]
    for action in parser._actions:
        dest = action.dest
        if dest in NOT_ECHOED or dest == "help" or not action.option_strings:
            continue
        value = getattr(args, dest, None)
        config[dest] = value
        if value is None or value is False:
            continue
        flag = action.option_strings[-1]
        if value is True:
            argv.append(flag)
        elif isinstance(value, list):
            if isinstance(action, argparse._AppendAction):
                for v in value:
                    argv += [flag, str(v)]
            elif action.nargs is None:  # comma-list types
                argv += [flag, ",".join(repr(float(v)) for v in value)]
            else:
                argv += [flag] + [repr(float(v)) for v in value]
        else:
            argv += [flag, repr(value) if isinstance(value, float) else str(value)]
    return config, argv


def _write_summary(out_dir: Path, name: str, args, parser, result: dict):
    config, argv = _echo(args, parser)
    doc = {"format_version": FORMAT_VERSION, "command": args.command, "config": config,
           "argv": argv, "result": result}
    path = out_dir / f"{name}.json"
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")
    return path


def _write_csv(out_dir: Path, name: str, header, rows):
    path = out_dir / f"{name}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["# format_version=" + FORMAT_VERSION])
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _system(name, param_items, system_file=None):
    if system_file:
        return load_system(system_file)
    if name == BROKEN_PAIR:
        return asymmetric_pair()
    return builtin(name, **_params(param_items))


# -- subcommands ---------------------------------------------------------------

def _synth_field(args):
    if not 0.0 < args.alpha < 1.0:
        raise UsageError(f"--alpha must lie in (0, 1), got {args.alpha}")
    if args.n < 8 or args.base < 2:
        raise UsageError("--n must be >= 8 and --base >= 2")
    grid = Grid.periodic(args.n, args.length, 0.0, args.dim)
    return make_weierstrass(grid, args.alpha, args.base, args.seed, args.amplitude)


def cmd_synth(args, parser, out_dir):
    f = _synth_field(args)
    header, data = write_field(f, out_dir / args.name)
    est = estimate_holder(f, args.alpha)
    _write_csv(out_dir, "synth", ["quantity", "value"],
               [("sup_norm", sup_norm(f)), ("holder_seminorm", est.seminorm),
                ("pair_count", est.pair_count)])
    _write_summary(out_dir, "synth", args, parser, {
        "files": [header.name, data.name], "sup_norm": sup_norm(f),
        "holder_seminorm": est.seminorm, "pair_count": est.pair_count})
    return EXIT_OK


def _nonlinearity(spec):
    kind, _, rest = spec.partition(":")
    if kind == "affine":
        a, b = (_floats(rest) + [0.0, 0.0])[:2] if rest else (1.0, 0.0)
        return cm.affine(a, b)
    if kind == "expr":
        return expression_map([rest], 1, {})
    return cm.nonlinearity(spec)


def cmd_commutator_scan(args, parser, out_dir):
    if args.field:
        v = read_field(args.field)
        alpha = args.alpha
    else:
        if args.alpha is None:
            raise UsageError("--alpha is required when no --field is given")
        v = _synth_field(args)
        alpha = args.alpha
    h = max(v.grid.h)
    if args.eps:
        eps = sorted(args.eps)
    else:
        if args.eps_decades <= 0 or args.eps_per_decade < 1:
            raise UsageError("--eps-decades and --eps-per-decade must be positive")
        count = int(round(args.eps_decades * args.eps_per_decade)) + 1
        eps = np.geomspace(args.eps_min_cells * h,
                           args.eps_min_cells * h * 10.0 ** args.eps_decades, count).tolist()
    F = _nonlinearity(args.F)
    report = cm.scaling_scan(v, F, eps, alpha=alpha, workers=args.threads)
    running = report.running_slopes()
    _write_csv(out_dir, "commutator_scan", ["epsilon", "sup_norm", "slope_running"],
               [(e, s, r) for (e, s), r in zip(report.samples, running)])
    _write_summary(out_dir, "commutator_scan", args, parser, {
        "alpha_input": alpha, "slope": report.fitted_slope,
        "intercept": report.fitted_intercept, "r2": report.r_squared,
        "verdict": report.verdict, "excluded_epsilons": report.excluded})
    return EXIT_FAILED if report.verdict == cm.INCONCLUSIVE else EXIT_OK


def cmd_check_pair(args, parser, out_dir):
    sys_, ep = _system(args.system, args.param, args.system_file)
    reports = [check_compatibility(sys_, ep, args.samples, args.seed),
               check_symmetry(sys_, ep, args.samples, args.seed)]
    rows = [(r.kind, r.max_residual_compat if r.kind == "compatibility"
             else r.max_residual_symmetry, r.max_fd_discrepancy, r.sample_count,
             " ".join(repr(float(x)) for x in r.worst_point)) for r in reports]
    _write_csv(out_dir, "check_pair",
               ["check", "max_residual", "max_fd_discrepancy", "samples", "worst_point"], rows)
    passed = all(row[1] <= args.tolerance for row in rows)
    _write_summary(out_dir, "check_pair", args, parser, {
        "system": sys_.name, "verdict": "PASS" if passed else "FAIL",
        "tolerance": args.tolerance, "max_residual_compat": reports[0].max_residual_compat,
        "max_residual_symmetry": reports[1].max_residual_symmetry,
        "reports": [r.to_dict() for r in reports]})
    return EXIT_OK if passed else EXIT_FAILED


def _initial_state(args, sys_, grid):
    x = grid.coords(0)
    lo, hi = grid.lower[0], grid.upper[0]
    ref = np.asarray(sys_.reference_state if sys_.reference_state is not None
                     else np.zeros(sys_.k), dtype=float)
    u = np.broadcast_to(ref, (len(x), sys_.k)).copy()
    if args.ic == "file":
        if not args.u0:
            raise UsageError("--ic file needs --u0")
        return read_field(args.u0)
    if args.ic == "sine":
        u[:, 0] += args.amplitude * np.sin(2.0 * np.pi * (x - lo) / (hi - lo))
    elif args.ic == "bump":
        c = 0.5 * (lo + hi) if args.center is None else args.center
        u[:, 0] += args.amplitude * bump((x - c) / args.width)
    elif args.ic == "riemann":
        ul = np.broadcast_to(np.asarray(args.ul, dtype=float), (sys_.k,))
        ur = np.broadcast_to(np.asarray(args.ur, dtype=float), (sys_.k,))
        x0 = 0.5 * (lo + hi) if args.center is None else args.center
        u = np.where((x < x0)[:, None], ul, ur)
    return Field(grid, u)


def cmd_solve(args, parser, out_dir):
    sys_, ep = _system(args.system, args.param)
    if args.n < 8 or args.t_end <= 0:
        raise UsageError("--n must be >= 8 and --t-end positive")
    lo, hi = args.domain
    if args.bc == "periodic":
        grid = Grid.periodic(args.n, hi - lo, lo)
    else:
        grid = Grid.bounded(args.n, lo, hi)
    u0 = _initial_state(args, sys_, grid)
    traj = solve(sys_, u0, args.t_end, cfl=args.cfl, flux=args.flux, bc=args.bc,
                 stride=args.stride, dt=args.dt)
    write_trajectory(traj, out_dir / args.name)
    w = grid.quadrature_weights(0)
    mass = traj.data[..., 0] @ w
    eta = ep.eta(traj.data) @ w
    _write_csv(out_dir, "solve", ["t", "mass", "total_entropy"], zip(traj.times, mass, eta))
    _write_summary(out_dir, "solve", args, parser, {
        "system": sys_.name, "trajectory": args.name, "steps_stored": len(traj.times),
        "t_final": traj.times[-1], "mass_drift": mass[-1] - mass[0],
        "entropy_drift": eta[-1] - eta[0]})
    return EXIT_OK


def _trajectory_pair(args):
    traj = read_trajectory(args.traj)
    name = args.system or traj.system
    return traj, _system(name, args.param)[1]


def cmd_defect(args, parser, out_dir):
    traj, ep = _trajectory_pair(args)
    phis = load_test_functions(args.phis)
    report = weak_residual(traj, ep, phis)
    rows = [(i, phis[i].center[0], phis[i].center[1], v) for i, v in report.pairings]
    _write_csv(out_dir, "defect", ["phi_id", "center_t", "center_x", "value"], rows)
    result = {"max_abs": report.max_abs, "sign_summary": report.sign_summary,
              "pairings": [v for _, v in report.pairings]}
    if args.shock_window:
        t_range = tuple(args.t_range) if args.t_range else None
        result["shock_dissipation_rate"] = shock_dissipation_rate(
            traj, ep, tuple(args.shock_window), t_range)
    _write_summary(out_dir, "defect", args, parser, result)
    return EXIT_OK


def cmd_budget(args, parser, out_dir):
    traj, ep = _trajectory_pair(args)
    budget = entropy_budget(traj, ep, args.deltas)
    header = ["t", "total_entropy", "entropy_rate", "boundary_flux"] + [
        f"cutoff_entropy_{i}" for i in range(len(budget.delta_list))]
    rows = [(t, s, r, b, *c) for t, s, r, b, c in zip(
        budget.times, budget.total_entropy, budget.entropy_rate, budget.boundary_flux,
        budget.cutoff_entropy.T)]
    _write_csv(out_dir, "budget", header, rows)
    _write_summary(out_dir, "budget", args, parser, budget.to_dict())
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--out-dir", default=".", help="directory for reports (default: .)")
    g.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format-version", default=FORMAT_VERSION)
    return p


def _synth_options(p, alpha_required):
    p.add_argument("--n", type=int, default=65536, help="points per axis")
    p.add_argument("--dim", type=int, choices=(1, 2), default=1)
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--alpha", type=float, required=alpha_required)
    p.add_argument("--base", type=int, default=2)
    p.add_argument("--amplitude", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="entropy-diagnostics", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {}

    p = sub.add_parser("synth", parents=[common], help="write a Weierstrass field")
    _synth_options(p, True)
    p.add_argument("--name", default="weierstrass", help="output file stem")
    p.set_defaults(handler=cmd_synth)
    parsers["synth"] = p

    p = sub.add_parser("commutator-scan", parents=[common], help="commutator scaling scan")
    _synth_options(p, False)
    p.add_argument("--field", help="read the field from this file stem instead of synthesizing")
    p.add_argument("--F", default="square",
                   help="square | cube | exp-clamped | affine:a,b | expr:<expression in u1>")
    p.add_argument("--eps", type=_floats, help="explicit comma-separated radii")
    p.add_argument("--eps-decades", type=float, default=2.5)
    p.add_argument("--eps-per-decade", type=int, default=4)
    p.add_argument("--eps-min-cells", type=float, default=8.0)
    p.set_defaults(handler=cmd_commutator_scan)
    parsers["commutator-scan"] = p

    p = sub.add_parser("check-pair", parents=[common], help="entropy compatibility checks")
    p.add_argument("--system", default="burgers", choices=BUILTIN_NAMES + (BROKEN_PAIR,))
    p.add_argument("--system-file", help="JSON system description (overrides --system)")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.set_defaults(handler=cmd_check_pair)
    parsers["check-pair"] = p

    p = sub.add_parser("solve", parents=[common], help="first-order finite-volume solve")
    p.add_argument("--system", default="burgers", choices=BUILTIN_NAMES)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--domain", type=float, nargs=2, default=[0.0, 1.0], metavar=("LO", "HI"))
    p.add_argument("--ic", choices=("sine", "bump", "riemann", "file"), default="sine")
    p.add_argument("--u0", help="initial field file stem for --ic file")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--center", type=float)
    p.add_argument("--width", type=float, default=0.1)
    p.add_argument("--ul", type=_floats, default=[1.0])
    p.add_argument("--ur", type=_floats, default=[-1.0])
    p.add_argument("--t-end", type=float, default=0.1)
    p.add_argument("--cfl", type=float, default=0.5)
    p.add_argument("--dt", type=float)
    p.add_argument("--flux", choices=FLUXES, default="godunov")
    p.add_argument("--bc", choices=BOUNDARY_CONDITIONS, default="periodic")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--name", default="trajectory")
    p.set_defaults(handler=cmd_solve)
    parsers["solve"] = p

    p = sub.add_parser("defect", parents=[common], help="weak entropy residuals")
    p.add_argument("--traj", required=True, help="trajectory directory")
    p.add_argument("--phis", required=True, help="JSON list of test functions")
    p.add_argument("--system", choices=BUILTIN_NAMES)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--shock-window", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--t-range", type=float, nargs=2, metavar=("T0", "T1"))
    p.set_defaults(handler=cmd_defect)
    parsers["defect"] = p

    p = sub.add_parser("budget", parents=[common], help="boundary entropy budget")
    p.add_argument("--traj", required=True, help="trajectory directory")
    p.add_argument("--deltas", type=_floats, required=True, help="comma-separated layer widths")
    p.add_argument("--system", choices=BUILTIN_NAMES)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.set_defaults(handler=cmd_budget)
    parsers["budget"] = p

    parser.subparsers = parsers
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    sub = parser.subparsers[args.command]
    try:
        if args.format_version != FORMAT_VERSION:
            raise UsageError(f"unsupported --format-version {args.format_version!r} "
                             f"(this build writes {FORMAT_VERSION})")
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return args.handler(args, sub, out_dir)
    except UsageError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"{parser.prog} {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConstraintError as exc:
        print(f"{parser.prog} {args.command}: constraint violated: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT


if __name__ == "__main__":
    sys.exit(main())
