"""Fitting of unregularized and ridge-smoothed M-estimators.

The estimator solves

    min_beta  sum_i rho_lam(y_i - x_i' beta)  (+ n*mu/2 * ||beta||^2),

by damped Newton steps: the Hessian X' D X with D = diag(psi_lam'(r)) can be
singular for Huber (psi' in {0, 1}), so an adaptive Levenberg term lev*I is
added, shrinking on accepted steps and growing on rejected ones, with Armijo
backtracking on the objective.  Convergence is declared on the normalized
KKT residual ||X' psi_lam(r) - n*mu*beta|| / n, which is the identity the
downstream risk formulas rely on.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import RankDeficientDesign
from .losses import ScaledLoss


@dataclass
class Dataset:
    """Design matrix (rows = observations), responses, and optional truth.

    ``sigma`` is the feature covariance used by the out-of-sample error;
    identity when absent.  Requires n > p >= 1.
    """

    X: np.ndarray
    y: np.ndarray
    beta_star: np.ndarray | None = None
    sigma: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).ravel()
        n, p = self.X.shape
        if not (n > p >= 1):
            raise ValueError(f"need n > p >= 1, got n={n}, p={p}")
        if self.y.shape[0] != n:
            raise ValueError("y length does not match the number of rows of X")
        if self.beta_star is not None:
            self.beta_star = np.asarray(self.beta_star, dtype=float).ravel()
            if self.beta_star.shape[0] != p:
                raise ValueError("beta_star length does not match p")
        if self.sigma is not None:
            self.sigma = np.asarray(self.sigma, dtype=float)
            if self.sigma.shape != (p, p):
                raise ValueError("sigma must be p x p")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class FitOptions:
    kkt_tol: float = 1e-8      # on ||X' psi||_2 / n
    max_iter: int = 500
    damping_floor: float = 1e-10

    def __post_init__(self):
        if not self.kkt_tol > 0:
            raise ValueError("kkt_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class FitResult:
    beta_hat: np.ndarray
    residuals: np.ndarray
    psi_vals: np.ndarray
    kkt_residual: float
    iterations: int
    converged: bool
    ridge_mu: float = 0.0
    objective_path: np.ndarray = field(default_factory=lambda: np.empty(0))


def fit(
    data: Dataset,
    loss: ScaledLoss,
    opts: FitOptions | None = None,
    beta0: np.ndarray | None = None,
    check_rank: bool = True,
) -> FitResult:
    """Fit the unregularized M-estimator; see the module docstring.

    ``beta0`` warm-starts the iteration (zeros by default).  ``check_rank``
    verifies full column rank of X once; sweeps over many lambdas on the
    same design can disable it after the first fit.
    """
    return _newton_fit(data, loss, 0.0, opts or FitOptions(), beta0, check_rank)


def fit_ridge(
    data: Dataset,
    loss: ScaledLoss,
    mu: float,
    opts: FitOptions | None = None,
    beta0: np.ndarray | None = None,
    check_rank: bool = True,
) -> FitResult:
    """Fit with an additional ridge term n*mu/2 * ||beta||^2 (mu > 0)."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    return _newton_fit(data, loss, mu, opts or FitOptions(), beta0, check_rank)


def _assert_full_rank(X):
    # Cholesky of X'X fails iff X is (numerically) column rank deficient
    try:
        np.linalg.cholesky(X.T @ X + 0.0)
    except np.linalg.LinAlgError:
        raise RankDeficientDesign(
            "design matrix X does not have full column rank"
        ) from None


def _weighted_gram(X, d):
    # X' diag(d) X; every branch is A.T @ A on a single array so BLAS can
    # use the symmetric rank-k fast path (d >= 0 for convex losses)
    if np.all(d == 1.0):
        return X.T @ X
    if d.min() == 0.0 and np.all((d == 0.0) | (d == 1.0)):
        Xm = X[d > 0.0]
        return Xm.T @ Xm
    Xw = X * np.sqrt(d)[:, None]
    return Xw.T @ Xw


def _opnorm_estimate(H, iters=30):
    rng = np.random.default_rng(0)
    v = rng.standard_normal(H.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = H @ v
        est = np.linalg.norm(w)
        if est == 0.0:
            return 0.0
        v = w / est
    return est


def _newton_fit(data, loss, mu, opts, beta0, check_rank):
    X, y = data.X, data.y
    n, p = data.n, data.p
    if check_rank:
        _assert_full_rank(X)

    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    r = y - X @ beta

    def objective(b, res):
        val = float(np.sum(loss.rho(res)))
        if mu > 0:
            val += 0.5 * n * mu * float(b @ b)
        return val

    obj = objective(beta, r)
    obj_path = [obj]
    lev = None
    iterations = 0
    converged = False

    while iterations < opts.max_iter:
        psi = loss.psi(r)
        grad = -(X.T @ psi)
        if mu > 0:
            grad += n * mu * beta
        kkt = float(np.linalg.norm(grad)) / n
        if kkt <= opts.kkt_tol:
            converged = True
            break

        iterations += 1
        d = loss.psi_prime(r)
        H = _weighted_gram(X, d)
        if mu > 0:
            H[np.diag_indices_from(H)] += n * mu
        if lev is None:
            lev = 1e-4 * _opnorm_estimate(H) / p

        accepted = False
        while not accepted:
            Hd = H.copy()
            Hd[np.diag_indices_from(Hd)] += max(lev, opts.damping_floor)
            try:
                cf = scipy.linalg.cho_factor(Hd, lower=True, check_finite=False)
            except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
                lev = max(lev, opts.damping_floor) * 10.0
                continue
            step = scipy.linalg.cho_solve(cf, -grad, check_finite=False)
            g_dot_step = float(grad @ step)  # < 0 for SPD systems

            t = 1.0
            slack = 4.0 * np.finfo(float).eps * (1.0 + abs(obj))
            for _ in range(30):
                cand = beta + t * step
                r_cand = y - X @ cand
                obj_cand = objective(cand, r_cand)
                if obj_cand <= obj + 1e-4 * t * g_dot_step + slack:
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                beta, r, obj = cand, r_cand, obj_cand
                obj_path.append(obj)
                lev = max(lev * 0.1, opts.damping_floor)
            else:
                lev = max(lev, opts.damping_floor) * 10.0
                if lev > 1e16 * max(1.0, _opnorm_estimate(H)):
                    break  # cannot make progress; report current point
        if not accepted:
            break

    psi = loss.psi(r)
    grad = -(X.T @ psi)
    if mu > 0:
        grad += n * mu * beta
    kkt = float(np.linalg.norm(grad)) / n
    converged = kkt <= opts.kkt_tol

    return FitResult(
        beta_hat=beta,
        residuals=r,
        psi_vals=psi,
        kkt_residual=kkt,
        iterations=iterations,
        converged=converged,
        ridge_mu=mu,
        objective_path=np.asarray(obj_path),
    )
