"""Command line entry point: ``antroute run | sweep | validate``.

Exit codes: 0 success, 1 invalid scenario or sweep file, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

import yaml

from .metrics import RUN_COLUMNS
from .runner import make_simulation, run_sweep
from .scenario import ScenarioError, load_scenario, load_sweep

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="antroute", description="Ant-colony MANET routing simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario with one seed")
    r.add_argument("--scenario", required=True, help="scenario YAML file")
    r.add_argument("--seed", type=int, default=1)
    r.add_argument("--trace", help="write the event trace to this file")
    r.add_argument("--dump-tables", action="store_true",
                   help="print every node's pheromone table after the run")

    s = sub.add_parser("sweep", help="run a parameter sweep and write the report")
    s.add_argument("--sweep", required=True, help="sweep YAML file")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--jobs", type=int, default=None, help="worker processes (default: from file)")

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("--scenario", required=True)
    return p


def _load_error(path, exc) -> int:
    if isinstance(exc, ScenarioError):
        print(f"{path}: {exc}", file=sys.stderr)
    else:
        print(f"{path}: cannot read: {exc}", file=sys.stderr)
    return EXIT_INVALID


def cmd_run(args) -> int:
    try:
        sc = load_scenario(args.scenario)
    except (ScenarioError, OSError, yaml.YAMLError) as exc:
        return _load_error(args.scenario, exc)
    trace = None
    try:
        if args.trace:
            trace = open(args.trace, "w")
        sim = make_simulation(sc, args.seed, trace)
        rec = sim.run()
    except Exception as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        if trace is not None:
            trace.close()
    row = rec.row()
    width = max(len(c) for c in RUN_COLUMNS)
    for c in RUN_COLUMNS:
        print(f"{c:<{width}}  {row[c]}")
    if rec.empty:
        print("(no data packets were sent)")
    if args.dump_tables:
        print()
        sys.stdout.write(sim.dump_tables())
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        spec = load_sweep(args.sweep)
    except (ScenarioError, OSError, yaml.YAMLError) as exc:
        return _load_error(args.sweep, exc)
    if args.jobs is not None and args.jobs < 1:
        print("--jobs must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        records, rows = run_sweep(spec, args.out, args.jobs)
    except Exception as exc:
        print(f"sweep failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{len(records)} runs, {len(rows)} groups -> {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        sc = load_scenario(args.scenario)
    except (ScenarioError, OSError, yaml.YAMLError) as exc:
        return _load_error(args.scenario, exc)
    print(f"{args.scenario}: ok ({sc.mode}, {sc.node_count} nodes, horizon {sc.horizon:g} s)")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
