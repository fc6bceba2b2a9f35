"""Command-line front end.

Exit status: 0 success, 1 validation failure, 2 parse error, 3 numerical
failure.  Errors print one ``error kind=<kind> reason=<text>`` line on
stderr.
"""

import argparse
import datetime
import sys
from pathlib import Path

from . import io as lio
from .dynamics import (
    ViscousOptions,
    propagate_deterministic,
    propagate_gaussian,
    propagate_viscous,
    sample_initial,
)
from .errors import NumericalFailure, ParseError
from .lab import SweepConfig, epsilon_sweep, optimality_check
from .measures import Empirical, Gaussian, moment_matched
from .ode import TimeGrid
from .problem import load_problem, validate
from .synthesis import AffineFeedback, synthesize

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3


class _Fail(Exception):
    def __init__(self, code, kind, reason):
        super().__init__(reason)
        self.code, self.kind, self.reason = code, kind, reason


def _eps_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad eps list {text!r}") from exc


def build_parser():
    parser = argparse.ArgumentParser(prog="lqmfc", description="LQ mean-field control: synthesis and vanishing viscosity")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output=True):
        p.add_argument("problem", help="problem JSON file")
        if output:
            p.add_argument("--output", required=True, help="output CSV path")
            p.add_argument("--grid", type=int, default=1000, help="time steps N (default 1000)")

    def representation(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--gaussian", dest="representation", action="store_const", const="gaussian")
        g.add_argument("--particles", dest="representation", action="store_const", const="empirical")
        p.add_argument("--samples", type=int, default=1000, help="particles when sampling (default 1000)")
        p.add_argument("--seed", type=int, default=0, help="64-bit seed (default 0)")

    common(sub.add_parser("validate", help="check the problem assumptions"), output=False)
    common(sub.add_parser("synthesize", help="write the Riccati cascade and gains as CSV"))

    p = sub.add_parser("simulate", help="write a trajectory dump")
    common(p)
    representation(p)
    p.add_argument("--eps", type=float, default=0.0, help="viscosity (default 0)")
    p.add_argument("--control", choices=("optimal", "zero"), default="optimal")

    p = sub.add_parser("sweep", help="vanishing-viscosity sweep report")
    common(p)
    representation(p)
    p.add_argument("--eps", type=_eps_list, required=True, help="comma-separated descending viscosities")
    p.add_argument("--perturbations", type=int, default=0, help="random feedback perturbations to test (default 0)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from the JSON sidecar")
    return parser


def _load(path):
    try:
        return load_problem(path)
    except OSError as exc:
        raise _Fail(EXIT_PARSE, "parse", f"cannot read {path}: {exc.strerror}") from exc
    except ParseError as exc:
        raise _Fail(EXIT_PARSE, "parse", str(exc)) from exc


def _require_valid(spec):
    report = validate(spec)
    if not report.ok:
        labels = ";".join(f"{v.condition}@{v.time}" for v in report.violations)
        raise _Fail(EXIT_INVALID, "validation", labels)
    return report


def _representation(args, spec):
    if args.representation is not None:
        return args.representation
    return "gaussian" if isinstance(spec.initial, Gaussian) else "empirical"


def _echo(spec, **items):
    fields = " ".join(f"{k}={v}" for k, v in items.items())
    print(f"digest={spec.digest()} {fields}".rstrip())


def _cmd_validate(args, spec):
    report = validate(spec)
    print(report)
    _echo(spec)
    if not report.ok:
        labels = ";".join(v.condition for v in report.violations)
        raise _Fail(EXIT_INVALID, "validation", labels)


def _cmd_synthesize(args, spec):
    _require_valid(spec)
    sol, _ = synthesize(spec, TimeGrid(args.grid, spec.horizon))
    lio.atomic_write(args.output, lio.synthesis_csv(sol))
    _echo(spec, grid=args.grid, output=args.output)


def _cmd_simulate(args, spec):
    _require_valid(spec)
    grid = TimeGrid(args.grid, spec.horizon)
    _, fb = synthesize(spec, grid)
    if args.control == "zero":
        fb = AffineFeedback.zero(grid, spec.dimension)
    rep = _representation(args, spec)
    if rep == "gaussian":
        traj = propagate_gaussian(spec, fb, moment_matched(spec.initial), args.eps, grid)
    else:
        init = spec.initial if isinstance(spec.initial, Empirical) else sample_initial(spec.initial, args.samples, args.seed)
        if args.eps == 0:
            traj = propagate_deterministic(spec, fb, init, grid)
        else:
            traj = propagate_viscous(spec, fb, init, ViscousOptions(args.eps, init.size, args.seed), grid)
    lio.atomic_write(args.output, lio.trajectory_csv(traj))
    _echo(spec, grid=args.grid, eps=args.eps, representation=rep, seed=args.seed, output=args.output)


def _sidecar_path(output):
    out = Path(output)
    side = out.with_suffix(".json")
    return side if side != out else out.with_suffix(".meta.json")


def _cmd_sweep(args, spec):
    _require_valid(spec)
    try:
        cfg = SweepConfig(
            tuple(args.eps),
            steps=args.grid,
            representation=args.representation,
            samples=args.samples,
            seed=args.seed,
            perturbations=args.perturbations,
        )
    except ValueError as exc:
        raise _Fail(EXIT_PARSE, "arguments", str(exc)) from exc
    report = epsilon_sweep(spec, cfg)
    extra = {}
    if args.perturbations > 0:
        records = optimality_check(spec, cfg)
        extra["optimality"] = [r._asdict() for r in records]
    stamp = None if args.no_timestamp else datetime.datetime.now(datetime.timezone.utc).isoformat()
    side = _sidecar_path(args.output)
    lio.atomic_write(args.output, lio.sweep_csv(report))
    lio.atomic_write(side, lio.sweep_sidecar(report, timestamp=stamp, extra=extra))
    _echo(spec, grid=args.grid, representation=report.metadata["representation"], seed=args.seed, output=args.output)


_COMMANDS = {
    "validate": _cmd_validate,
    "synthesize": _cmd_synthesize,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
}


def run(argv=None):
    """Execute one invocation and return its exit status."""
    args = build_parser().parse_args(argv)
    try:
        spec = _load(args.problem)
        _COMMANDS[args.command](args, spec)
    except _Fail as exc:
        print(f"error kind={exc.kind} reason={exc.reason}", file=sys.stderr)
        return exc.code
    except NumericalFailure as exc:
        print(f"error kind=numerical reason={type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main():
    sys.exit(run())
