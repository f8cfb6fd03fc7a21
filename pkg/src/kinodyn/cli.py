"""Command line entry points.

`plan` runs a scenario end to end (assemble, solve, validate, export),
`validate` re-checks a trajectory file against a model and scenario,
`plot` renders the standard figures from exported artifacts. Exit codes:
0 ok, 2 solver did not converge, 3 validation failed, 4 unreadable or
malformed inputs. A plan run exits 0 only when the independent
validation passes; the solver's own status is never taken at its word.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ColumnMismatch, KinodynError, MalformedDocument
from .model import parse_model
from .plots import emit_plots
from .scenario import parse_scenario
from .solve import SolveOptions, solve
from .trajectory import from_vector, read_csv, write_csv
from .transcription import assemble, initial_guess
from .validate import validate

EXIT_OK = 0
EXIT_NOT_CONVERGED = 2
EXIT_VALIDATION = 3
EXIT_BAD_INPUT = 4


def _read_text(path, what):
    try:
        with open(path, "r") as fh:
            return fh.read()
    except OSError as e:
        raise _CliError("io", f"cannot read {what} {path!r}: {e.strerror or e}")


class _CliError(Exception):
    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


def _load_model(path):
    return parse_model(_read_text(path, "model"))


def _load_scenario(path):
    return parse_scenario(_read_text(path, "scenario"))


def _write_report(out_dir, payload):
    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def _jet_meta(model):
    return [{"name": j.name, "thrust_max": j.thrust_max} for j in model.jets]


def _cmd_plan(args):
    model = _load_model(args.model)
    scenario = _load_scenario(args.scenario)
    if args.dt is not None:
        scenario.dt = float(args.dt)
        scenario.dt_bounds = None
    elif args.free_dt and scenario.dt_bounds is None:
        scenario.dt_bounds = (0.5 * scenario.dt, 2.0 * scenario.dt)
    if args.seed is not None:
        scenario.seed = int(args.seed)

    os.makedirs(args.out, exist_ok=True)
    log_path = args.log or os.path.join(args.out, "solver_log.csv")
    opts = SolveOptions(seed=scenario.seed, log_path=log_path)
    if args.max_iter is not None:
        opts.max_iter = int(args.max_iter)

    problem = assemble(model, scenario)
    guess = initial_guess(problem)
    sol = solve(problem, guess, opts)

    dt_value = (
        sol.variables[problem.layout.dt_index] if scenario.free_dt else scenario.dt
    )
    traj = from_vector(problem.layout, sol.variables, dt_value)
    traj_path = os.path.join(args.out, "trajectory.csv")
    write_csv(traj, traj_path)

    report = validate(model, scenario, traj)
    payload = {
        "model": args.model,
        "scenario": args.scenario,
        "seed": scenario.seed,
        "mass": model.total_mass,
        "jets": _jet_meta(model),
        "solver": dict(sol.stats, status=sol.status),
        "validation": report.to_dict(),
    }
    _write_report(args.out, payload)
    emit_plots(traj, payload, args.out)

    print(f"solver: {sol.status} in {sol.stats['iterations']} outer iterations "
          f"({sol.stats['wall_time_s']:.1f}s), objective {sol.stats['objective']:.6g}")
    print(f"validation: {'pass' if report.ok else 'FAIL'}; "
          f"flight intervals {report.flight_intervals}")
    print(f"artifacts in {args.out}")
    if sol.status != "converged":
        return EXIT_NOT_CONVERGED
    if not report.ok:
        return EXIT_VALIDATION
    return EXIT_OK


def _cmd_validate(args):
    model = _load_model(args.model)
    scenario = _load_scenario(args.scenario)
    traj = read_csv(args.trajectory)
    report = validate(model, scenario, traj)
    for c in report.checks:
        mark = "ok " if c.ok else "BAD"
        print(f"{mark} {c.name:<14} worst {c.worst: .3e}  tol {c.tol:.1e}  knot {c.knot}")
    print(f"flight intervals: {report.flight_intervals}")
    print("validation: " + ("pass" if report.ok else "FAIL"))
    return EXIT_OK if report.ok else EXIT_VALIDATION


def _cmd_plot(args):
    traj = read_csv(args.trajectory)
    try:
        report = json.loads(_read_text(args.report, "report"))
    except json.JSONDecodeError as e:
        raise MalformedDocument(f"report is not valid JSON: {e}")
    os.makedirs(args.out, exist_ok=True)
    for path in emit_plots(traj, report, args.out):
        print(f"wrote {path}")
    return EXIT_OK


def _parser():
    p = argparse.ArgumentParser(prog="kinodyn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="solve a scenario and export artifacts")
    plan.add_argument("--model", required=True)
    plan.add_argument("--scenario", required=True)
    plan.add_argument("--out", required=True)
    plan.add_argument("--max-iter", type=int, default=None)
    step = plan.add_mutually_exclusive_group()
    step.add_argument("--dt", type=float, default=None)
    step.add_argument("--free-dt", action="store_true")
    plan.add_argument("--seed", type=int, default=None)
    plan.add_argument("--log", default=None, help="solver iterate log path")
    plan.set_defaults(fn=_cmd_plan)

    val = sub.add_parser("validate", help="re-check a trajectory file")
    val.add_argument("--model", required=True)
    val.add_argument("--scenario", required=True)
    val.add_argument("--trajectory", required=True)
    val.set_defaults(fn=_cmd_validate)

    plot = sub.add_parser("plot", help="render figures from artifacts")
    plot.add_argument("--trajectory", required=True)
    plot.add_argument("--report", required=True)
    plot.add_argument("--out", required=True)
    plot.set_defaults(fn=_cmd_plot)
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        return args.fn(args)
    except _CliError as e:
        _report_failure(args, e.kind, str(e))
        return EXIT_BAD_INPUT
    except (MalformedDocument, ColumnMismatch) as e:
        _report_failure(args, "parse", str(e))
        return EXIT_BAD_INPUT
    except KinodynError as e:
        _report_failure(args, "solve", str(e))
        return EXIT_NOT_CONVERGED


def _report_failure(args, kind, message):
    print(f"error ({kind}): {message}", file=sys.stderr)
    out = getattr(args, "out", None)
    if out:
        try:
            os.makedirs(out, exist_ok=True)
            _write_report(out, {"error": {"kind": kind, "message": message}})
        except OSError:
            pass


if __name__ == "__main__":
    sys.exit(main())
