"""Observable out-of-sample-error estimate and Jacobian traces.

For a converged fit with residual vector r = y - X beta_hat, the estimate is

    r_hat = p * ||psi_lam(r)||^2 / tr[V]^2,

where V is the Jacobian of the map y -> psi_lam(y - X beta_hat(y)).  Closed
forms for the trace:

    Huber:   tr[V] = #{i : |r_i| <= lam} - p        (boundary counts as inlier)
    smooth:  tr[V] = sum_i [ psi'(r_i)
                             - psi'(r_i)^2 x_i' (X' D X)^{-1} x_i ],
             D = diag(psi'(r))

and for a ridge-smoothed fit with penalty n*mu/2*||beta||^2,

    V_mu = D - D X (X' D X + n*mu*I)^{-1} X' D.

An independent finite-difference oracle (coordinate basis or Hutchinson
probes, refitting at each perturbed response vector) cross-checks the
closed forms.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import OracleError
from .losses import ScaledLoss
from .solver import Dataset, FitOptions, FitResult, fit

HUBER_CLOSED_FORM = "huber_closed_form"
SMOOTH_CLOSED_FORM = "smooth_closed_form"
FINITE_DIFFERENCE = "finite_difference"
HUTCHINSON = "hutchinson"


def trace_floor(n: int) -> float:
    """Below this, tr[V] is treated as degenerate (division would explode)."""
    return max(1.0, 1e-6 * n)


@dataclass
class RiskEstimate:
    r_hat: float
    psi_sq_norm: float
    trace_v: float
    trace_method: str
    degenerate: bool


def oracle_risk(fitres: FitResult, data: Dataset) -> float:
    """||sigma^{1/2}(beta_hat - beta_star)||^2; needs beta_star on the dataset."""
    if data.beta_star is None:
        raise ValueError("oracle_risk requires a dataset with beta_star")
    delta = fitres.beta_hat - data.beta_star
    if data.sigma is None:
        return float(delta @ delta)
    return float(delta @ (data.sigma @ delta))


def trace_jacobian(
    fitres: FitResult, data: Dataset, loss: ScaledLoss
) -> tuple[float, str]:
    """Trace of the psi-map Jacobian for a converged fit.

    Uses the Huber inlier count for mu = 0 Huber fits, the closed-form trace
    for twice-differentiable losses (one Cholesky of X' D X), and the ridge
    variant when the fit carries mu > 0.  A singular inner matrix falls back
    to the finite-difference oracle with a warning.
    """
    if not fitres.converged:
        raise ValueError("trace_jacobian requires a converged fit")
    r = fitres.residuals
    mu = fitres.ridge_mu

    if mu == 0.0 and loss.base.name == "huber":
        inliers = int(np.sum(np.abs(r) <= loss.lam))
        return float(inliers - data.p), HUBER_CLOSED_FORM

    d = loss.psi_prime(r)
    X = data.X
    M = (X * d[:, None]).T @ X
    if mu > 0:
        M[np.diag_indices_from(M)] += data.n * mu
    try:
        cf = scipy.linalg.cho_factor(M, lower=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        warnings.warn(
            "inner matrix X'DX singular; falling back to finite differences",
            RuntimeWarning,
        )
        val = trace_jacobian_fd_oracle(data, loss, probe_kind="coordinate")
        return val, FINITE_DIFFERENCE
    quad = np.einsum("ij,ji->i", X, scipy.linalg.cho_solve(cf, X.T))
    return float(np.sum(d) - np.sum(d * d * quad)), SMOOTH_CLOSED_FORM


def estimate_risk(fitres: FitResult, data: Dataset, loss: ScaledLoss) -> RiskEstimate:
    """Observable estimate r_hat = p ||psi||^2 / tr[V]^2 with degeneracy guard."""
    psi_sq = float(fitres.psi_vals @ fitres.psi_vals)
    tv, method = trace_jacobian(fitres, data, loss)
    if tv <= trace_floor(data.n):
        return RiskEstimate(np.inf, psi_sq, tv, method, True)
    return RiskEstimate(data.p * psi_sq / tv**2, psi_sq, tv, method, False)


def fd_trace(
    map_fn,
    y0: np.ndarray,
    step: float,
    probes: int,
    probe_kind: str = "rademacher",
    seed: int = 0,
) -> float:
    """Finite-difference trace of the Jacobian of ``map_fn`` at ``y0``.

    Hutchinson form (1/K) sum_k z_k' [f(y+s z_k) - f(y-s z_k)] / (2s) with
    Rademacher probes, or the exact-up-to-step coordinate-basis version when
    ``probe_kind="coordinate"`` (probes is then capped at len(y0)).
    """
    n = y0.shape[0]
    if step <= 0:
        raise ValueError("step must be positive")
    if probes < 1:
        raise ValueError("probes must be >= 1")
    total = 0.0
    if probe_kind == "coordinate":
        for j in range(min(probes, n)):
            z = np.zeros(n)
            z[j] = 1.0
            diff = map_fn(y0 + step * z) - map_fn(y0 - step * z)
            total += diff[j] / (2.0 * step)
        return float(total)
    if probe_kind != "rademacher":
        raise ValueError(f"unknown probe_kind {probe_kind!r}")
    rng = np.random.default_rng(seed)
    for _ in range(probes):
        z = rng.integers(0, 2, size=n) * 2.0 - 1.0
        diff = map_fn(y0 + step * z) - map_fn(y0 - step * z)
        total += float(z @ diff) / (2.0 * step)
    return total / probes


def trace_jacobian_fd_oracle(
    data: Dataset,
    loss: ScaledLoss,
    opts: FitOptions | None = None,
    step: float | None = None,
    probes: int | None = None,
    probe_kind: str = "coordinate",
    seed: int = 0,
) -> float:
    """Independent trace oracle: refit at perturbed y and difference psi.

    Default steps: 1e-6 for the coordinate basis, 1e-4 for Hutchinson
    (refit noise vs truncation tradeoff).  Perturbed fits warm-start at the
    unperturbed solution and use a KKT tolerance well below the step so that
    refit noise does not pollute the difference quotients; any non-convergent
    inner fit raises OracleError.
    """
    opts = opts or FitOptions(kkt_tol=1e-13)
    if step is None:
        step = 1e-6 if probe_kind == "coordinate" else 1e-4
    if probes is None:
        probes = data.n if probe_kind == "coordinate" else 100

    base_fit = fit(data, loss, opts)
    if not base_fit.converged:
        raise OracleError("base fit did not converge")
    beta0 = base_fit.beta_hat
    X = data.X

    def psi_at(y_pert):
        pert = Dataset(X, y_pert)
        res = fit(pert, loss, opts, beta0=beta0, check_rank=False)
        if not res.converged:
            raise OracleError("perturbed fit did not converge")
        return loss.psi(y_pert - X @ res.beta_hat)

    return fd_trace(psi_at, data.y, step, probes, probe_kind, seed)
