"""Data-driven selection of the loss scale lambda.

The scale is chosen by minimizing the observable risk estimate over a
geometric (log-equispaced) grid; fits are warm-started along the ascending
grid, degenerate grid points (near-zero Jacobian trace) are recorded but
excluded from the argmin, and ties break toward the smallest lambda.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TuningError
from .losses import BaseLoss, ScaledLoss
from .risk import estimate_risk
from .solver import Dataset, FitOptions, fit, _assert_full_rank


@dataclass(frozen=True)
class LambdaGrid:
    lambda_min: float
    lambda_max: float
    n_points: int

    def __post_init__(self):
        if not 0 < self.lambda_min < self.lambda_max:
            raise ValueError("need 0 < lambda_min < lambda_max")
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")

    def points(self) -> np.ndarray:
        i = np.arange(self.n_points)
        ratio = self.lambda_max / self.lambda_min
        return self.lambda_min * ratio ** (i / (self.n_points - 1))


def make_grid(lambda_min: float, lambda_max: float, n_points: int) -> LambdaGrid:
    return LambdaGrid(lambda_min, lambda_max, n_points)


@dataclass
class TuningRow:
    lam: float
    r_hat: float
    trace_v: float
    psi_sq_norm: float
    kkt_residual: float
    degenerate: bool


@dataclass
class TuningReport:
    rows: list[TuningRow]
    selected_lambda: float
    selected_index: int


def tune(
    data: Dataset,
    base: BaseLoss,
    grid: LambdaGrid,
    opts: FitOptions | None = None,
    warm_start: bool = True,
) -> TuningReport:
    """Fit every grid lambda, estimate its risk, return the full audit table.

    Individual fit failures mark the row degenerate and the sweep continues;
    if every row is degenerate, TuningError is raised.  ``warm_start=False``
    recomputes each fit from a cold start (results agree within solver
    tolerance and the rows become order-independent).
    """
    opts = opts or FitOptions()
    _assert_full_rank(data.X)
    rows: list[TuningRow] = []
    beta0 = None
    for lam in grid.points():
        loss = ScaledLoss(base, float(lam))
        res = fit(data, loss, opts, beta0=beta0 if warm_start else None,
                  check_rank=False)
        if not res.converged:
            rows.append(TuningRow(float(lam), np.inf, np.nan, np.nan,
                                  res.kkt_residual, True))
            continue
        if warm_start:
            beta0 = res.beta_hat
        est = estimate_risk(res, data, loss)
        rows.append(TuningRow(float(lam), est.r_hat, est.trace_v,
                              est.psi_sq_norm, res.kkt_residual, est.degenerate))

    selected_index = -1
    best = np.inf
    for i, row in enumerate(rows):
        if row.degenerate:
            continue
        if row.r_hat < best:  # strict: ties keep the smaller lambda
            best = row.r_hat
            selected_index = i
    if selected_index < 0:
        raise TuningError("every grid point was degenerate; cannot select lambda")
    return TuningReport(rows, rows[selected_index].lam, selected_index)
