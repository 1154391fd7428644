"""Sphere-function convergence of the four PSO variants (10-D, 41 generations).

    python scripts/pso_convergence.py [--out results/pso]

Writes per-seed CSVs per variant plus ``median_history.csv`` with the
median best fitness per generation for each variant.
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from ampc.pso import VARIANTS, PsoHyper, pso_run, sphere

ROOT = Path(__file__).resolve().parents[1]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(ROOT / "results/pso"))
    parser.add_argument("--dims", type=int, default=10)
    parser.add_argument("--gens", type=int, default=41)
    parser.add_argument("--seeds", type=int, default=20)
    args = parser.parse_args()

    out = Path(args.out)
    bounds = [(-10.0, 10.0)] * args.dims
    medians = {}
    for variant in VARIANTS:
        (out / variant).mkdir(parents=True, exist_ok=True)
        histories = []
        for seed in range(args.seeds):
            res = pso_run(sphere, bounds, PsoHyper(generations=args.gens, variant=variant, seed=seed))
            res.write_csv(out / variant / f"seed_{seed}.csv")
            histories.append(res.fitness_history)
        medians[variant] = np.median(np.array(histories), axis=0)
        print(f"{variant:<9} median final {medians[variant][-1]:.4g}")
    with open(out / "median_history.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["generation", *VARIANTS])
        for g in range(args.gens + 1):
            writer.writerow([g, *(repr(float(medians[v][g])) for v in VARIANTS)])


if __name__ == "__main__":
    main()
