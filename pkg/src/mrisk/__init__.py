"""Robust M-estimation under heavy-tailed noise in the proportional regime:
observable out-of-sample-error estimation, asymptotic risk curves, and
data-driven tuning of the loss scale."""

__version__ = "0.1.0"

from .asymptotic import (NoiseModel, SystemSolution, alpha_curve, parse_noise,
                         solve_system, system_residuals)
from .errors import (OracleError, ProxSolveError, RankDeficientDesign,
                     SystemSolveError, TuningError)
from .losses import (BaseLoss, ScaledLoss, base_loss, custom_loss, evaluate,
                     prox, scaled_loss)
from .risk import (RiskEstimate, estimate_risk, oracle_risk, trace_jacobian,
                   trace_jacobian_fd_oracle)
from .simlab import (ExperimentConfig, ExperimentRecord, generate_dataset,
                     run_experiment)
from .solver import Dataset, FitOptions, FitResult, fit, fit_ridge
from .tuning import LambdaGrid, TuningReport, make_grid, tune

__all__ = [
    "BaseLoss", "ScaledLoss", "base_loss", "custom_loss", "evaluate",
    "prox", "scaled_loss",
    "Dataset", "FitOptions", "FitResult", "fit", "fit_ridge",
    "RiskEstimate", "estimate_risk", "oracle_risk", "trace_jacobian",
    "trace_jacobian_fd_oracle",
    "NoiseModel", "SystemSolution", "alpha_curve", "parse_noise",
    "solve_system", "system_residuals",
    "LambdaGrid", "TuningReport", "make_grid", "tune",
    "ExperimentConfig", "ExperimentRecord", "generate_dataset",
    "run_experiment",
    "OracleError", "ProxSolveError", "RankDeficientDesign",
    "SystemSolveError", "TuningError",
]
