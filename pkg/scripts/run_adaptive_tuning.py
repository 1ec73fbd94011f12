#!/usr/bin/env python3
"""Adaptive scale tuning as the noise level varies: for each sigma in a
grid, select lambda by minimizing R_hat over a 101-point log grid and
record the selected risk next to the grid optimum and the theoretical
optimum.
"""
import argparse
import os

os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

import numpy as np

from mrisk import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paper-scale", action="store_true",
                    help="n=4000, p=1200, 100 repetitions, 9 sigmas (slow)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--reps", type=int, default=None)
    ap.add_argument("--out", default="results/adaptive_tuning.csv")
    ap.add_argument("--n-jobs", type=int, default=1)
    args = ap.parse_args()

    if args.paper_scale:
        n, p, reps = 4000, 1200, args.reps or 100
        sigmas = tuple(np.round(np.linspace(1.0, 3.0, 9), 3))
    else:
        n, p, reps = 2000, 600, args.reps or 20
        sigmas = (1.0, 1.5, 2.0, 2.5, 3.0)

    cfg = ExperimentConfig(
        experiment="adaptive_tuning", n=n, p=p,
        lambda_min=1.0, lambda_max=10.0, lambda_points=101,
        sigma_grid=sigmas, repetitions=reps, seed=args.seed,
        with_alpha=True, output_path=args.out, n_jobs=args.n_jobs,
    )
    run_experiment(cfg)


if __name__ == "__main__":
    main()
