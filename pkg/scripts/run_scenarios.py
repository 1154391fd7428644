"""Run every shipped scenario with AMPC, fixed MPC and pure pursuit.

    python scripts/run_scenarios.py [--out results/scenarios]

Writes one trace/summary directory per (scenario, controller) and prints an
MSE table.
"""
import argparse
from pathlib import Path

from ampc.adaptation import load_table
from ampc.config import load_scenario, load_settings
from ampc.sim import CONTROLLERS, run_scenario

ROOT = Path(__file__).resolve().parents[1]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(ROOT / "results/scenarios"))
    parser.add_argument("--table", default=str(ROOT / "data/ampc_table.json"))
    parser.add_argument("--config", default=str(ROOT / "configs/default.yaml"))
    args = parser.parse_args()

    settings = load_settings(args.config)
    table = load_table(args.table)
    print(f"{'scenario':<10} {'ctrl':<5} {'mse':>10} {'max|e|':>8} {'viol':>5} diverged")
    for path in sorted((ROOT / "configs/scenarios").glob("*.yaml")):
        scenario = load_scenario(path)
        for ctrl in CONTROLLERS:
            res = run_scenario(scenario, ctrl, settings.sim, table)
            res.write(Path(args.out) / path.stem / ctrl)
            print(f"{path.stem:<10} {ctrl:<5} {res.mse:>10.4g} {res.max_abs_error:>8.3f} {res.violations:>5} "
                  f"{res.diverged}")


if __name__ == "__main__":
    main()
