"""Command-line interface.

Subcommands: fit | risk | tune | system | curve | simulate.
Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .asymptotic import alpha_curve, parse_noise, solve_system
from .errors import (OracleError, ProxSolveError, RankDeficientDesign,
                     SystemSolveError, TuningError)
from .losses import base_loss, scaled_loss
from .risk import estimate_risk
from .simlab import ExperimentConfig, load_dataset_csv, run_experiment
from .solver import FitOptions, fit
from .tuning import make_grid, tune

NUMERICAL_ERRORS = (
    SystemSolveError, TuningError, OracleError, ProxSolveError,
    RankDeficientDesign, np.linalg.LinAlgError,
)


def _add_loss_args(p, with_lambda=True):
    p.add_argument("--loss", default="huber", help="huber or pseudo_huber")
    if with_lambda:
        p.add_argument("--lambda", dest="lam", type=float, required=True,
                       help="loss scale (> 0)")


def _add_grid_args(p):
    p.add_argument("--lambda-min", type=float, default=1.0)
    p.add_argument("--lambda-max", type=float, default=10.0)
    p.add_argument("--lambda-points", type=int, default=101)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrisk",
        description="Robust M-estimation with observable risk estimation "
                    "and adaptive scale tuning.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one M-estimator and report its risk estimate")
    p.add_argument("--data", required=True,
                   help="headerless CSV, response in column 0, features after")
    _add_loss_args(p)

    p = sub.add_parser("risk", help="risk estimate for one fit, as JSON")
    p.add_argument("--data", required=True)
    _add_loss_args(p)

    p = sub.add_parser("tune", help="select lambda over a log-spaced grid")
    p.add_argument("--data", required=True)
    p.add_argument("--loss", default="huber")
    _add_grid_args(p)
    p.add_argument("--out", default=None, help="write the tuning table CSV here")

    p = sub.add_parser("system", help="solve the asymptotic risk system")
    _add_loss_args(p)
    p.add_argument("--noise", required=True, help='e.g. "t:2", "gauss:1", "gauss+cauchy"')
    p.add_argument("--gamma", type=float, required=True)

    p = sub.add_parser("curve", help="alpha^2(lambda) over a grid, as CSV")
    p.add_argument("--loss", default="huber")
    _add_grid_args(p)
    p.add_argument("--noise", required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("simulate", help="run an experiment from a TOML config")
    p.add_argument("--config", required=True)
    return parser


def _cmd_fit(args) -> int:
    data = load_dataset_csv(args.data)
    loss = scaled_loss(args.loss, args.lam)
    res = fit(data, loss, FitOptions())
    est = estimate_risk(res, data, loss)
    head = np.array2string(res.beta_hat[:8], precision=5)
    print(f"n={data.n} p={data.p} loss={args.loss} lambda={args.lam:g}")
    print(f"beta_hat[:8] = {head}")
    print(f"||beta_hat|| = {np.linalg.norm(res.beta_hat):.6g}")
    print(f"iterations = {res.iterations}  converged = {res.converged}")
    print(f"kkt_residual = {res.kkt_residual:.3e}")
    print(f"R_hat = {est.r_hat:.6g}  (trace_v = {est.trace_v:g}, "
          f"method = {est.trace_method}, degenerate = {est.degenerate})")
    return 0 if res.converged else 2


def _cmd_risk(args) -> int:
    data = load_dataset_csv(args.data)
    loss = scaled_loss(args.loss, args.lam)
    res = fit(data, loss, FitOptions())
    if not res.converged:
        print("fit did not converge", file=sys.stderr)
        return 2
    est = estimate_risk(res, data, loss)
    print(json.dumps({
        "r_hat": est.r_hat, "psi_sq_norm": est.psi_sq_norm,
        "trace_v": est.trace_v, "trace_method": est.trace_method,
        "degenerate": est.degenerate, "kkt_residual": res.kkt_residual,
    }))
    return 0


def _cmd_tune(args) -> int:
    data = load_dataset_csv(args.data)
    grid = make_grid(args.lambda_min, args.lambda_max, args.lambda_points)
    report = tune(data, base_loss(args.loss), grid)
    writer = csv.writer(open(args.out, "w", newline="") if args.out else sys.stdout)
    writer.writerow(["lambda", "r_hat", "trace_v", "psi_sq_norm",
                     "kkt_residual", "degenerate"])
    for row in report.rows:
        writer.writerow([repr(row.lam), repr(row.r_hat), repr(row.trace_v),
                         repr(row.psi_sq_norm), repr(row.kkt_residual),
                         int(row.degenerate)])
    print(f"selected_lambda = {report.selected_lambda!r} "
          f"(index {report.selected_index})")
    return 0


def _cmd_system(args) -> int:
    loss = scaled_loss(args.loss, args.lam)
    sol = solve_system(loss, parse_noise(args.noise), args.gamma)
    print(json.dumps({
        "alpha": sol.alpha, "kappa": sol.kappa,
        "residual": sol.residual_norm, "alpha_sq": sol.alpha_sq,
    }))
    return 0


def _cmd_curve(args) -> int:
    grid = make_grid(args.lambda_min, args.lambda_max, args.lambda_points)
    pts = alpha_curve(base_loss(args.loss), parse_noise(args.noise),
                      args.gamma, grid)
    writer = csv.writer(open(args.out, "w", newline="") if args.out else sys.stdout)
    writer.writerow(["lambda", "alpha_sq", "kappa", "residual"])
    for pt in pts:
        writer.writerow([repr(pt.lam), repr(pt.alpha_sq), repr(pt.kappa),
                         repr(pt.residual_norm)])
    return 0


def _cmd_simulate(args) -> int:
    cfg = ExperimentConfig.from_toml(args.config)
    run_experiment(cfg)
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "risk": _cmd_risk,
    "tune": _cmd_tune,
    "system": _cmd_system,
    "curve": _cmd_curve,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; remap to 1 (2 means numerical failure)
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except NUMERICAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
