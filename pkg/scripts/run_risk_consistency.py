#!/usr/bin/env python3
"""Risk-estimate consistency sweep: R and R_hat across a lambda grid,
with the theoretical alpha^2(lambda) curve attached.

Desk scale by default (n=2000, p=600, 20 reps); --paper-scale runs the
full-size experiment (n=4000, p=1200, 100 reps), which takes a while.
"""
import argparse
import os

os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

from mrisk import ExperimentConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paper-scale", action="store_true",
                    help="n=4000, p=1200, 100 repetitions (slow)")
    ap.add_argument("--noise", default="t:2")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--reps", type=int, default=None)
    ap.add_argument("--out", default="results/risk_consistency.csv")
    ap.add_argument("--n-jobs", type=int, default=1)
    args = ap.parse_args()

    if args.paper_scale:
        n, p, reps = 4000, 1200, args.reps or 100
    else:
        n, p, reps = 2000, 600, args.reps or 20

    cfg = ExperimentConfig(
        experiment="risk_consistency", n=n, p=p, noise=args.noise,
        lambda_min=1.0, lambda_max=10.0, lambda_points=21,
        repetitions=reps, seed=args.seed, with_alpha=True,
        output_path=args.out, n_jobs=args.n_jobs,
    )
    run_experiment(cfg)


if __name__ == "__main__":
    main()
