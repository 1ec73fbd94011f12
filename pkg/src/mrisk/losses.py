"""Scalar calculus of robust losses.

A base loss rho is convex, differentiable, minimized exactly at 0, with a
bounded 1-Lipschitz derivative psi = rho'.  The lambda-scaled family

    rho_lam(x) = lam^2 * rho(x / lam),
    psi_lam(x) = lam * psi(x / lam),
    psi_lam'(x) = psi'(x / lam),

interpolates between the square loss (lam -> inf) and lam*|x| (lam -> 0+).
The scaling leaves the Lipschitz constant of psi_lam invariant and gives
sup|psi_lam| = lam * sup|psi|.

Built-ins:

    huber:        rho(x) = x^2/2 for |x| <= 1, |x| - 1/2 otherwise
    pseudo_huber: rho(x) = sqrt(1 + x^2) - 1

Both have sup|psi| = 1 and curvature constant eta = 1, meaning
psi(x)^2 / sup|psi|^2 + psi'(x) >= eta almost everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ProxSolveError

ArrayLike = "float | np.ndarray"


@dataclass(frozen=True)
class BaseLoss:
    """Robust base loss given by the triple (rho, psi, psi')."""

    name: str
    rho_fn: Callable[[np.ndarray], np.ndarray]
    psi_fn: Callable[[np.ndarray], np.ndarray]
    psi_prime_fn: Callable[[np.ndarray], np.ndarray]
    psi_sup: float          # sup norm of psi, finite by assumption
    eta: float              # lower bound for psi^2/psi_sup^2 + psi'
    smooth: bool            # twice continuously differentiable, psi' > 0 everywhere

    def rho(self, x):
        return self.rho_fn(np.asarray(x, dtype=float))

    def psi(self, x):
        return self.psi_fn(np.asarray(x, dtype=float))

    def psi_prime(self, x):
        return self.psi_prime_fn(np.asarray(x, dtype=float))


def _huber_rho(x):
    a = np.abs(x)
    return np.where(a <= 1.0, 0.5 * x * x, a - 0.5)


def _huber_psi(x):
    return np.clip(x, -1.0, 1.0)


def _huber_psi_prime(x):
    # derivative at the kink |x| = 1 takes the inlier-side value 1, so that
    # the Jacobian trace equals (#inliers with |r| <= lam) - p
    return np.where(np.abs(x) <= 1.0, 1.0, 0.0)


def _pseudo_huber_rho(x):
    return np.hypot(1.0, x) - 1.0


def _pseudo_huber_psi(x):
    return x / np.hypot(1.0, x)


def _pseudo_huber_psi_prime(x):
    return (1.0 + x * x) ** (-1.5)


HUBER = BaseLoss(
    name="huber",
    rho_fn=_huber_rho,
    psi_fn=_huber_psi,
    psi_prime_fn=_huber_psi_prime,
    psi_sup=1.0,
    eta=1.0,
    smooth=False,
)

PSEUDO_HUBER = BaseLoss(
    name="pseudo_huber",
    rho_fn=_pseudo_huber_rho,
    psi_fn=_pseudo_huber_psi,
    psi_prime_fn=_pseudo_huber_psi_prime,
    psi_sup=1.0,
    eta=1.0,
    smooth=True,
)

_BUILTINS = {"huber": HUBER, "pseudo_huber": PSEUDO_HUBER}


def base_loss(name: str) -> BaseLoss:
    """Look up a built-in base loss by name ("huber" or "pseudo_huber")."""
    try:
        return _BUILTINS[name]
    except KeyError:
        raise ValueError(
            f"unknown loss {name!r}; choose from {sorted(_BUILTINS)}"
        ) from None


def custom_loss(
    name: str,
    rho_fn,
    psi_fn,
    psi_prime_fn,
    psi_sup: float,
    eta: float,
    smooth: bool = True,
    validate: bool = True,
) -> BaseLoss:
    """Wrap a user-supplied (rho, psi, psi') triple.

    The caller declares sup|psi| and eta; Lipschitzness of psi and the sup
    bound are spot-checked by sampling, not proved.
    """
    if psi_sup <= 0 or eta <= 0:
        raise ValueError("psi_sup and eta must be positive")
    loss = BaseLoss(name, rho_fn, psi_fn, psi_prime_fn, psi_sup, eta, smooth)
    if validate:
        x = np.linspace(-50.0, 50.0, 4001)
        p = loss.psi(x)
        if np.max(np.abs(p)) > psi_sup * (1 + 1e-9):
            raise ValueError("declared psi_sup is violated on sampled points")
        slopes = np.abs(np.diff(p) / np.diff(x))
        if np.max(slopes) > 1 + 1e-6:
            raise ValueError("psi is not 1-Lipschitz on sampled points")
        if abs(float(loss.rho(0.0))) > 1e-12 or np.any(loss.rho(x) < -1e-12):
            raise ValueError("rho must be minimized at 0 with rho(0) = 0")
    return loss


@dataclass(frozen=True)
class ScaledLoss:
    """Base loss with scale lam > 0: rho_lam(x) = lam^2 rho(x/lam)."""

    base: BaseLoss
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")

    def rho(self, x):
        return self.lam**2 * self.base.rho(np.asarray(x, dtype=float) / self.lam)

    def psi(self, x):
        return self.lam * self.base.psi(np.asarray(x, dtype=float) / self.lam)

    def psi_prime(self, x):
        return self.base.psi_prime(np.asarray(x, dtype=float) / self.lam)

    @property
    def psi_sup(self) -> float:
        return self.lam * self.base.psi_sup


def scaled_loss(name: str, lam: float) -> ScaledLoss:
    return ScaledLoss(base_loss(name), lam)


def evaluate(loss: ScaledLoss, x):
    """Return the triple (rho_lam(x), psi_lam(x), psi_lam'(x))."""
    triple = loss.rho(x), loss.psi(x), loss.psi_prime(x)
    if np.ndim(x) == 0:
        return tuple(float(v) for v in triple)
    return triple


def prox(loss: ScaledLoss, kappa: float, x, tol: float = 1e-12, max_iter: int = 200):
    """Proximal map of kappa * rho_lam: argmin_u (x-u)^2/2 + kappa*rho_lam(u).

    Huber uses the closed form

        x - prox = kappa * lam * clip(x / (lam * (1 + kappa)), -1, 1),

    other losses solve the stationarity equation u + kappa*psi_lam(u) = x
    with a bisection-safeguarded Newton iteration to absolute tolerance
    ``tol``.  The minimizer always lies in [x - kappa*sup|psi_lam|,
    x + kappa*sup|psi_lam|].
    """
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)

    if loss.base.name == "huber":
        lam = loss.lam
        u = x - kappa * lam * np.clip(x / (lam * (1.0 + kappa)), -1.0, 1.0)
    else:
        u = _prox_newton(loss, kappa, x, tol, max_iter)
    return float(u[0]) if scalar else u


def _prox_newton(loss, kappa, x, tol, max_iter):
    bound = kappa * loss.psi_sup
    lo = x - bound
    hi = x + bound
    u = x / (1.0 + kappa)  # exact in the quadratic region, good start elsewhere
    for _ in range(max_iter):
        f = u + kappa * loss.psi(u) - x
        if np.max(np.abs(f)) <= tol:
            return u
        # monotone f with f' >= 1: keep a bracket and fall back to bisection
        hi = np.where(f > 0, u, hi)
        lo = np.where(f < 0, u, lo)
        step = f / (1.0 + kappa * loss.psi_prime(u))
        cand = u - step
        outside = (cand <= lo) | (cand >= hi)
        u = np.where(outside, 0.5 * (lo + hi), cand)
    raise ProxSolveError(
        f"prox Newton did not reach |f| <= {tol} in {max_iter} iterations "
        f"(max residual {np.max(np.abs(u + kappa * loss.psi(u) - x)):.3e}); "
        "this should not happen for a convex loss"
    )
