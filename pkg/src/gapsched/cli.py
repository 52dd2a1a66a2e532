"""Command-line entry point: ``gapsched {schedule,generate,sweep,verify}``.

Exit codes: 0 success, 1 infeasible instances or violations, 2 usage or
parse error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import io
from .generator import GenerationError, GenParams, OccupancyParams, apply_ccr, generate_dag, generate_preoccupation
from .metrics import normalized_reward, schedule_stats
from .oracle import verify_schedule
from .periodic import schedule_periodic
from .sweep import PAPER_SWEEP, SweepConfig, config_from_dict, run_sweep, write_sweep
from .workload import validate_dag

OK, FAILED, USAGE = 0, 1, 2

log = logging.getLogger("gapsched")


def _load_inputs(dag_paths: Sequence[str], platform_path: str):
    platform = io.read_platform(platform_path)
    dags = [io.read_dag(p) for p in dag_paths]
    problems = []
    for path, dag in zip(dag_paths, dags):
        problems += [f"{path}: {issue}" for issue in validate_dag(dag, platform)]
    return dags, platform, problems


def cmd_schedule(args) -> int:
    dags, platform, problems = _load_inputs(args.dags, args.platform)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return USAGE
    hs = schedule_periodic(dags, platform, args.repetition_factor, enhance=not args.base_only)
    out = Path(args.output)
    io.dump_json(io.schedule_to_dict(hs), out)
    gantt = Path(args.gantt) if args.gantt else out.with_suffix(".gantt.csv")
    io.write_csv(gantt, io.GANTT_COLUMNS, io.gantt_rows(hs, platform))

    report = normalized_reward(hs, dags)
    stats = schedule_stats(hs, platform)
    print(f"hyperperiod {hs.hyperperiod}, horizon {hs.horizon}, {len(hs.entries)} entries, "
          f"{len(hs.instances())} instance(s)")
    print(report.summary())
    for vm in platform.vm_ids:
        print(f"  {vm}: busy {stats.busy[vm]}, idle {stats.idle[vm]}, pre-occupied {stats.preoccupied[vm]}")
    for f in hs.failures:
        print(f"FAILED {f.dag_id}#{f.cycle_index}: {f.reason}")
    print(f"wrote {out} and {gantt}")
    return FAILED if hs.failures else OK


def cmd_verify(args) -> int:
    dags, platform, problems = _load_inputs(args.dags, args.platform)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return USAGE
    hs = io.read_schedule(args.schedule)
    violations = verify_schedule(hs, dags, platform)
    for v in violations:
        print(v)
    print(f"{len(violations)} violation(s)")
    return FAILED if violations else OK


def cmd_generate(args) -> int:
    gen = GenParams(
        args.n_tasks,
        edge_density=args.edge_density,
        n_levels=args.levels,
        period_slack=Fraction(args.period_slack),
        exec_time_range=tuple(args.exec_range),
        seed=args.seed,
        n_vms=args.n_vms,
        period_quantum=args.background_period,
        dag_id=args.dag_id,
    )
    occ = OccupancyParams(
        n_vms=args.n_vms,
        occupancy_fraction=Fraction(args.occupancy),
        background_period=args.background_period,
        min_slot=args.min_slot,
        seed=args.seed,
    )
    platform = generate_preoccupation(occ)
    dag = apply_ccr(generate_dag(gen), Fraction(args.ccr), platform)
    io.dump_json(io.dag_to_dict(dag), args.dag_out)
    io.dump_json(io.platform_to_dict(platform), args.platform_out)
    print(f"wrote {args.dag_out} ({len(dag.tasks)} tasks, {len(dag.edges)} edges, period {dag.period}) "
          f"and {args.platform_out} ({args.n_vms} VMs)")
    return OK


def _sweep_config(args) -> SweepConfig:
    base = PAPER_SWEEP if args.preset == "paper-sweep" else SweepConfig()
    if args.config:
        doc = io.load_json(args.config)
        if not isinstance(doc, dict):
            raise io.SchemaError(args.config, "$", "sweep config must be a JSON object")
        base = config_from_dict(doc, base)
    overrides = {}
    for name in ("dag_sizes", "processor_grid", "axes"):
        v = getattr(args, name)
        if v:
            overrides[name] = tuple(v)
    for name in ("occupancy_grid", "ccr_grid"):
        v = getattr(args, name)
        if v:
            overrides[name] = tuple(Fraction(x) for x in v)
    if args.dags_per_size is not None:
        overrides["dags_per_size"] = args.dags_per_size
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    overrides["workers"] = args.workers
    overrides["timing"] = args.timing
    overrides["repetition_factor"] = args.repetition_factor
    overrides["output"] = args.output
    return config_from_dict(overrides, base)


def cmd_sweep(args) -> int:
    config = _sweep_config(args)
    rows = run_sweep(config)
    results, agg = write_sweep(config, rows, config.output)
    print(f"{len(rows)} runs; wrote {results} and {agg}")
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gapsched", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("schedule", help="schedule DAG files onto a pre-occupied platform")
    s.add_argument("dags", nargs="*", help="DAG JSON files (scheduled in the given order)")
    s.add_argument("--platform", required=True)
    s.add_argument("--output", required=True, help="schedule JSON to write")
    s.add_argument("--gantt", help="Gantt CSV path (default: <output>.gantt.csv)")
    s.add_argument("--repetition-factor", type=int, default=1)
    s.add_argument("--base-only", action="store_true", help="skip quality enhancement")
    s.set_defaults(func=cmd_schedule)

    v = sub.add_parser("verify", help="check a schedule against its inputs")
    v.add_argument("schedule")
    v.add_argument("--dags", nargs="*", default=[])
    v.add_argument("--platform", required=True)
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("generate", help="write a random DAG and a pre-occupied platform")
    g.add_argument("--n-tasks", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n-vms", type=int, default=4)
    g.add_argument("--occupancy", default="0.3")
    g.add_argument("--ccr", default="0.5")
    g.add_argument("--edge-density", type=float, default=0.3)
    g.add_argument("--levels", type=int, default=2)
    g.add_argument("--period-slack", default="1.5")
    g.add_argument("--exec-range", type=int, nargs=2, default=[1, 10], metavar=("MIN", "MAX"))
    g.add_argument("--background-period", type=int, default=20)
    g.add_argument("--min-slot", type=int, default=2)
    g.add_argument("--dag-id", default="dag")
    g.add_argument("--dag-out", required=True)
    g.add_argument("--platform-out", required=True)
    g.set_defaults(func=cmd_generate)

    w = sub.add_parser("sweep", help="run occupancy / CCR / processor sweeps")
    w.add_argument("--preset", choices=["paper-sweep"], default="paper-sweep")
    w.add_argument("--config", help="JSON file overriding SweepConfig fields")
    w.add_argument("--sizes", dest="dag_sizes", type=int, nargs="+")
    w.add_argument("--dags-per-size", type=int)
    w.add_argument("--occupancy-grid", nargs="+")
    w.add_argument("--ccr-grid", nargs="+")
    w.add_argument("--processor-grid", type=int, nargs="+")
    w.add_argument("--axes", nargs="+", choices=["occupancy", "ccr", "processors"])
    w.add_argument("--seed", type=int)
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--timing", action="store_true", help="fill wall_ms (makes rows run-dependent)")
    w.add_argument("--repetition-factor", type=int, default=1)
    w.add_argument("--output", required=True, help="directory for results.csv and aggregate.csv")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except io.SchemaError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return USAGE
    except (GenerationError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
