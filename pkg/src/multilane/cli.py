"""Command line entry point: ``multilane run|verify|convergence|compare``.

Exit codes: 0 success, 1 usage or input error, 2 invariant or verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import diagnostics, scenario_io, solver
from .model import ModelError
from .numerics import CFLViolation

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
ALL_CHECKS = ("bounds", "conservation", "entropy", "time-continuity", "bv", "fictive")


class UsageError(Exception):
    pass


def _times(text: str) -> tuple:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad time list {text!r}") from exc


def _interval(text: str) -> tuple:
    try:
        a, b = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"interval must be a:b, got {text!r}") from exc
    return a, b


def _add_common(p: argparse.ArgumentParser, scenario_flag: bool = True):
    if scenario_flag:
        p.add_argument("--scenario", required=True, help="scenario file or bundled name (e.g. s31)")
    p.add_argument("--dx", type=float, help="mesh width")
    p.add_argument("--cfl", type=float, help="fraction of the largest stable lambda, in (0, 1]")
    p.add_argument("--tend", type=float, help="final time T")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multilane", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario and write CSV snapshots")
    _add_common(p)
    p.add_argument("--out", default="out", help="output directory")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--snapshots", type=int, help="number of equally spaced snapshots in [0, T]")
    g.add_argument("--times", type=_times, help="comma-separated snapshot times")
    p.add_argument("--with-entropy", action="store_true",
                   help="log the discrete entropy residual every step")

    p = sub.add_parser("verify", help="run a scenario and check the discrete estimates")
    _add_common(p)
    p.add_argument("--checks", default="all", help=f"comma-separated subset of {','.join(ALL_CHECKS)}")
    p.add_argument("--interval", type=_interval, action="append",
                   help="BV interval a:b not containing 0 (repeatable)")
    p.add_argument("--s", type=float, help="BV margin s (default 0.4*min(|a|,|b|))")
    p.add_argument("--c-grid", type=_times, default=diagnostics.DEFAULT_C_GRID,
                   help="entropy constants (default 0,0.1,...,1)")
    p.add_argument("--out", help="directory for report.json (default: print to stdout)")

    p = sub.add_parser("convergence", help="self-convergence table under mesh halving")
    _add_common(p)
    p.add_argument("--levels", type=int, default=4)

    p = sub.add_parser("compare", help="L1 distance between two runs differing in initial data")
    _add_common(p, scenario_flag=False)
    p.add_argument("--scenario-a", required=True)
    p.add_argument("--scenario-b", required=True)
    return parser


def _load(name: str, args) -> solver.Scenario:
    sc = scenario_io.parse_scenario(name)
    changes = {}
    if args.dx is not None:
        changes["dx"] = args.dx
    if args.cfl is not None:
        changes["cfl_fraction"] = args.cfl
    if args.tend is not None:
        changes["T"] = args.tend
        changes["snapshot_times"] = tuple(t for t in sc.snapshot_times if t <= args.tend)
    return sc.with_(**changes) if changes else sc


def _snapshot_times(args, T: float) -> tuple:
    if args.times is not None:
        return args.times
    if args.snapshots is not None:
        if args.snapshots < 2:
            raise UsageError("--snapshots needs at least 2")
        return tuple(np.linspace(0.0, T, args.snapshots).tolist())
    return ()


def cmd_run(args) -> int:
    sc = _load(args.scenario, args)
    sc = sc.with_(snapshot_times=tuple(sorted(set(sc.snapshot_times) | set(_snapshot_times(args, sc.T)))))
    result = solver.run(sc, entropy_c=diagnostics.DEFAULT_C_GRID if args.with_entropy else None)
    paths = scenario_io.write_run(result, args.out)
    summary = scenario_io.run_summary(result)
    ok = all(summary[k]["passed"] for k in ("bounds", "conservation", "fictive"))
    if args.with_entropy:
        ent = diagnostics.entropy_check(result)
        ok = ok and ent.passed
        print(f"entropy: max residual {ent.max_residual:.3e} ({'pass' if ent.passed else 'FAIL'})")
    for name in ("bounds", "conservation", "fictive"):
        rep = summary[name]
        print(f"{name}: measured {rep['measured']:.3e} vs {rep['bound']:.3e} "
              f"({'pass' if rep['passed'] else 'FAIL'})")
    print(f"wrote {len(paths) - 1} snapshot(s) and manifest to {args.out}")
    return EXIT_OK if ok else EXIT_FAIL


def _default_intervals(grid) -> list:
    return [(0.75 * grid.x_min, 0.25 * grid.x_min), (0.25 * grid.x_max, 0.75 * grid.x_max)]


def verify_result(result: solver.RunResult, checks, intervals=None, s=None,
                  c_grid=diagnostics.DEFAULT_C_GRID) -> dict:
    """Evaluate the selected checks on a finished run; returns a JSON-ready report."""
    report = {"scenario": result.scenario.name, "checks": {}}
    out = report["checks"]
    if "bounds" in checks:
        out["bounds"] = diagnostics.bounds_check(result).as_dict()
    if "conservation" in checks:
        out["conservation"] = diagnostics.conservation_check(result).as_dict()
    if "fictive" in checks:
        out["fictive"] = diagnostics.fictive_check(result).as_dict()
    if "time-continuity" in checks:
        out["time-continuity"] = diagnostics.time_continuity_check(result).as_dict()
    if "entropy" in checks:
        out["entropy"] = diagnostics.entropy_check(result, c_grid).as_dict()
    if "bv" in checks:
        reps = []
        for a, b in intervals or _default_intervals(result.grid):
            ss = s if s is not None else 0.4 * min(abs(a), abs(b))
            reps.append(diagnostics.bv_check(result, a, b, ss).as_dict())
        out["bv"] = {"passed": all(r["passed"] for r in reps), "intervals": reps}
    report["passed"] = all(v["passed"] for v in out.values())
    return report


def cmd_verify(args) -> int:
    checks = ALL_CHECKS if args.checks == "all" else tuple(c.strip() for c in args.checks.split(","))
    unknown = set(checks) - set(ALL_CHECKS)
    if unknown:
        raise UsageError(f"unknown check(s): {', '.join(sorted(unknown))}")
    sc = _load(args.scenario, args)
    if "bv" in checks:
        grid = sc.grid()
        for a, b in args.interval or _default_intervals(grid):
            s = args.s if args.s is not None else 0.4 * min(abs(a), abs(b))
            try:
                diagnostics.bv_indices(grid, a, b, s)
            except ModelError as exc:
                raise UsageError(str(exc)) from exc
    result = solver.run(
        sc,
        keep_history="bv" in checks,
        entropy_c=args.c_grid if "entropy" in checks else None,
    )
    report = verify_result(result, checks, args.interval, args.s, args.c_grid)
    text = json.dumps(report, indent=2, default=float)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "report.json").write_text(text + "\n")
    else:
        print(text)
    for name, rep in report["checks"].items():
        print(f"{name}: {'pass' if rep['passed'] else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_convergence(args) -> int:
    if args.levels < 2:
        raise UsageError("--levels must be at least 2")
    sc = _load(args.scenario, args)
    table = diagnostics.convergence_study(sc, args.levels)
    print(f"{'dx':>12} {'L1 to next':>14} {'order':>8}")
    for i, d in enumerate(table.distances):
        order = f"{table.orders[i - 1]:8.3f}" if i >= 1 else " " * 8
        print(f"{table.dx[i]:12.6g} {d:14.6e} {order}")
    return EXIT_OK


def cmd_compare(args) -> int:
    a = _load(args.scenario_a, args)
    b = _load(args.scenario_b, args)
    if (a.topology != b.topology or a.profiles != b.profiles or a.grid() != b.grid() or a.T != b.T):
        raise UsageError("scenarios must share lanes, speed laws, numerics and horizon")
    cmp = diagnostics.l1_distance(solver.run(a), solver.run(b))
    print(f"initial L1 distance: {cmp.initial:.10g}")
    print(f"final L1 distance:   {cmp.final:.10g}")
    print(f"verdict: {'pass' if cmp.passed else 'FAIL'} (slack {cmp.slack:.3g})")
    return EXIT_OK if cmp.passed else EXIT_FAIL


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "convergence": cmd_convergence, "compare": cmd_compare}


def _join_negative_values(argv: list) -> list:
    # "--interval -1.5:-0.5" would otherwise be read as an option
    out, it = [], iter(argv)
    for tok in it:
        if tok == "--interval":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"--interval={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_values(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return COMMANDS[args.command](args)
    except CFLViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, FileNotFoundError, scenario_io.ScenarioFileError, solver.ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
