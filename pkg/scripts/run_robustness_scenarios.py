#!/usr/bin/env python3
"""Robustness studies: integer-valued noise without a smooth component,
non-Gaussian covariate designs, aspect ratios approaching 1, sample-size
scaling of the estimate's spread, and a vanishing smooth noise component.

Writes one CSV per scenario into --out-dir.
"""
import argparse
import os

os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

from mrisk import ExperimentConfig, run_experiment

SCENARIOS = ("nonsmooth_noise", "universality", "gamma_sweep", "n_sweep",
             "vanishing_smooth")


def build_config(name, n, reps, seed, out_dir, n_jobs):
    path = os.path.join(out_dir, f"{name}.csv")
    common = dict(seed=seed, output_path=path, n_jobs=n_jobs)
    if name == "nonsmooth_noise":
        return ExperimentConfig(experiment=name, n=n, p=int(0.3 * n),
                                noise="ceil-t:3:2", lambda_min=1.0,
                                lambda_max=10.0, lambda_points=11,
                                repetitions=reps, with_alpha=True, **common)
    if name == "universality":
        return ExperimentConfig(experiment=name, n=n, p=int(0.3 * n),
                                noise="t:2", lam=1.0, repetitions=reps,
                                with_alpha=True, **common)
    if name == "gamma_sweep":
        return ExperimentConfig(experiment=name, n=n, p=int(0.25 * n),
                                noise="t:2", lam=1.0,
                                gamma_grid=(0.25, 0.5, 0.8, 0.95),
                                repetitions=reps, with_alpha=False, **common)
    if name == "n_sweep":
        return ExperimentConfig(experiment=name, n=2000, p=500, noise="t:2",
                                lam=1.0, n_grid=(500, 1000, 2000),
                                repetitions=max(reps, 50), with_alpha=False,
                                **common)
    if name == "vanishing_smooth":
        return ExperimentConfig(experiment=name, n=n, p=int(0.3 * n),
                                lam=2.0, repetitions=reps, with_alpha=False,
                                **common)
    raise ValueError(name)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", choices=SCENARIOS + ("all",), default="all")
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--n-jobs", type=int, default=1)
    args = ap.parse_args()

    names = SCENARIOS if args.scenario == "all" else (args.scenario,)
    for name in names:
        print(f"=== {name} ===")
        cfg = build_config(name, args.n, args.reps, args.seed,
                           args.out_dir, args.n_jobs)
        run_experiment(cfg)


if __name__ == "__main__":
    main()
