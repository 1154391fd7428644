"""Command line entry point: ``ampc simulate | tune | pso-bench | validate``."""
from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace

import numpy as np

from .adaptation import LookupTable, TableEntry, TableError, load_table, save_table, vehicle_hash
from .config import ConfigError, load_grid, load_scenario, load_settings
from .pso import VARIANTS, PsoHyper, pso_run, sphere, tune_mpc
from .sim import CONTROLLERS, run_scenario


def cmd_simulate(args) -> int:
    settings = load_settings(args.config)
    scenario = load_scenario(args.scenario)
    table = load_table(args.table) if args.table else None
    result = run_scenario(scenario, args.controller, settings.sim, table)
    result.write(args.out)
    print(f"{scenario.name} [{args.controller}] mse={result.mse:.6g} max_abs_error={result.max_abs_error:.4g} "
          f"violations={result.violations} diverged={result.diverged}")
    return 0


def cmd_tune(args) -> int:
    settings = load_settings(args.config)
    speeds, offsets = load_grid(args.grid)
    hyper = settings.pso if args.seed is None else replace(settings.pso, seed=args.seed)
    conv_dir = os.path.splitext(args.out)[0] + "_convergence"
    os.makedirs(conv_dir, exist_ok=True)
    entries = []
    for v in speeds:
        for off in offsets:
            params, fitness, swarm = tune_mpc((v, off), settings.tune_bounds, hyper, settings.sim, settings.maneuver)
            swarm.write_csv(os.path.join(conv_dir, f"v{v:g}_y{off:g}.csv"))
            entries.append(TableEntry(v, off, params, fitness, hyper.seed))
            print(f"v={v:g} y={off:g} fitness={fitness:.6g} {params}", flush=True)
    table = LookupTable(tuple(entries), speeds, offsets, vehicle_hash(settings.sim.vehicle))
    save_table(table, args.out)
    return 0


def cmd_pso_bench(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    bounds = [(-args.bound, args.bound)] * args.dims
    finals = []
    for k in range(args.seeds):
        seed = args.seed + k
        hyper = PsoHyper(generations=args.gens, population=args.pop, variant=args.variant, seed=seed)
        result = pso_run(sphere, bounds, hyper)
        result.write_csv(os.path.join(args.out, f"seed_{seed}.csv"))
        finals.append(result.best_fitness)
    with open(os.path.join(args.out, "summary.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["variant", "dims", "generations", "population", "seeds", "median_final", "min_final",
                         "max_final"])
        writer.writerow([args.variant, args.dims, args.gens, args.pop, args.seeds, repr(float(np.median(finals))),
                         repr(float(np.min(finals))), repr(float(np.max(finals)))])
    print(f"{args.variant}: median final fitness {np.median(finals):.4g} over {args.seeds} seeds")
    return 0


def cmd_validate(args) -> int:
    try:
        table = load_table(args.table)
    except (TableError, OSError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    print(f"ok: {len(table.entries)} entries")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ampc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one closed-loop scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--controller", choices=CONTROLLERS, required=True)
    p.add_argument("--table")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; simulation is deterministic")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tune", help="tune the controller over an operating grid")
    p.add_argument("--grid", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="overrides pso.seed")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("pso-bench", help="PSO convergence on the sphere function")
    p.add_argument("--variant", choices=VARIANTS, default="improved")
    p.add_argument("--dims", type=int, default=10)
    p.add_argument("--gens", type=int, default=41)
    p.add_argument("--pop", type=int, default=20)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--bound", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pso_bench)

    p = sub.add_parser("validate", help="check a lookup table document")
    p.add_argument("--table", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
