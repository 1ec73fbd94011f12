"""Asymptotic risk: the two-equation system in (alpha, kappa).

In the proportional regime p/n -> gamma in (0, 1), the out-of-sample error
of the M-estimator converges to alpha^2, where (alpha, kappa) solves

    alpha^2 * gamma = E[ (S - prox[kappa rho_lam](S))^2 ],
    alpha   * gamma = E[ (S - prox[kappa rho_lam](S)) * Z ],
    S = alpha * Z + W,   Z ~ N(0,1) independent of W ~ noise.

Expectations are tensor quadrature: Gauss-Hermite in Z crossed with a node/
weight representation of W.  Heavy-tailed W has no Gaussian quadrature, so W
is represented by an equal-probability quantile grid (analytic quantile
functions where available, seeded Monte Carlo quantiles for convolutions);
the integrands x - prox(x) are bounded by kappa*sup|psi_lam|, so the tail
truncation error is controlled.

The root-finder is damped Newton in (log alpha, log kappa), which keeps both
unknowns positive without constraints.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import stats

from .errors import SystemSolveError
from .losses import BaseLoss, ScaledLoss, prox
from .tuning import LambdaGrid

QUANTILE_GRID_SIZE = 4001
MC_QUANTILE_SAMPLES = 4_000_001
DISCRETE_MASS_TOL = 1e-6


@lru_cache(maxsize=8)
def _gauss_hermite(order: int):
    # nodes/weights for E[f(Z)], Z ~ N(0,1): z = sqrt(2)x, w /= sqrt(pi)
    x, w = hermgauss(order)
    return np.sqrt(2.0) * x, w / np.sqrt(np.pi)


def _midpoint_probs(m: int) -> np.ndarray:
    return (np.arange(m) + 0.5) / m


@dataclass(frozen=True)
class NoiseModel:
    """Noise distribution as (sampler kind, quadrature nodes/weights)."""

    kind: str
    params: tuple
    w_nodes: np.ndarray
    w_weights: np.ndarray
    label: str
    seed: int | None = None  # only set when nodes came from MC quantiles
    parts: tuple = ()        # component models for convolutions

    def __post_init__(self):
        if abs(float(np.sum(self.w_weights)) - 1.0) > 1e-12:
            raise ValueError("noise weights must sum to 1")
        if not np.all(np.isfinite(self.w_nodes)):
            raise ValueError("noise nodes must be finite")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "gaussian":
            (sig,) = self.params
            return sig * rng.standard_normal(size)
        if self.kind == "student_t":
            (df,) = self.params
            return stats.t.ppf(rng.uniform(size=size), df)
        if self.kind == "scaled_student_t":
            sig, df = self.params
            return sig * stats.t.ppf(rng.uniform(size=size), df)
        if self.kind == "cauchy":
            (sig,) = self.params
            return sig * np.tan(np.pi * (rng.uniform(size=size) - 0.5))
        if self.kind == "discrete_ceil_t":
            scale, df = self.params
            return scale * np.floor(stats.t.ppf(rng.uniform(size=size), df))
        if self.kind == "convolution":
            out = np.zeros(size)
            for part in self.parts:
                out += part.sample(rng, size)
            return out
        raise ValueError(f"unknown noise kind {self.kind!r}")

    def truncated_second_moment(self, c: float) -> float:
        """E[min(W^2, c)] under the node/weight representation."""
        return float(np.sum(self.w_weights * np.minimum(self.w_nodes**2, c)))


def gaussian_noise(sigma: float = 1.0, order: int = 81) -> NoiseModel:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    z, w = _gauss_hermite(order)
    return NoiseModel("gaussian", (sigma,), sigma * z, w, f"gauss:{sigma:g}")


def student_t_noise(df: float, m: int = QUANTILE_GRID_SIZE) -> NoiseModel:
    nodes = stats.t.ppf(_midpoint_probs(m), df)
    w = np.full(m, 1.0 / m)
    return NoiseModel("student_t", (df,), nodes, w, f"t:{df:g}")


def scaled_t_noise(sigma: float, df: float, m: int = QUANTILE_GRID_SIZE) -> NoiseModel:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    nodes = sigma * stats.t.ppf(_midpoint_probs(m), df)
    w = np.full(m, 1.0 / m)
    return NoiseModel("scaled_student_t", (sigma, df), nodes, w, f"scaled-t:{sigma:g}:{df:g}")


def cauchy_noise(sigma: float = 1.0, m: int = QUANTILE_GRID_SIZE) -> NoiseModel:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    nodes = sigma * np.tan(np.pi * (_midpoint_probs(m) - 0.5))
    w = np.full(m, 1.0 / m)
    return NoiseModel("cauchy", (sigma,), nodes, w, f"cauchy:{sigma:g}")


def discrete_ceil_t_noise(scale: float, df: float) -> NoiseModel:
    """Atoms of scale*floor(T), T ~ t(df), up to probability mass 1 - 1e-6.

    Intentionally violates the smooth-noise condition; the floor convention
    follows the discretization used in the integer-noise experiment.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    k_max = 1
    while 2.0 * stats.t.sf(k_max, df) > DISCRETE_MASS_TOL:
        k_max *= 2
    ks = np.arange(-k_max, k_max + 1)
    probs = stats.t.cdf(ks + 1.0, df) - stats.t.cdf(ks, df)
    keep = probs > 0
    ks, probs = ks[keep], probs[keep]
    probs = probs / probs.sum()
    return NoiseModel(
        "discrete_ceil_t", (scale, df), scale * ks.astype(float), probs,
        f"ceil-t:{scale:g}:{df:g}",
    )


def convolution_noise(parts, seed: int = 0, m: int = QUANTILE_GRID_SIZE) -> NoiseModel:
    """Sum of independent components, represented by MC quantiles of the sum."""
    parts = tuple(parts)
    if len(parts) < 2:
        raise ValueError("convolution needs at least two components")
    rng = np.random.default_rng(seed)
    total = np.zeros(MC_QUANTILE_SAMPLES)
    for part in parts:
        total += part.sample(rng, MC_QUANTILE_SAMPLES)
    nodes = np.quantile(total, _midpoint_probs(m))
    w = np.full(m, 1.0 / m)
    label = "+".join(part.label for part in parts)
    return NoiseModel("convolution", (), nodes, w, label, seed=seed, parts=parts)


def parse_noise(spec: str, seed: int = 0) -> NoiseModel:
    """Parse "t:2", "gauss:1.0", "gauss+cauchy", "ceil-t:3:2", "scaled-t:2:2".

    "+"-joined specs form a convolution of independent components.
    """
    spec = spec.strip()
    if "+" in spec:
        return convolution_noise([parse_noise(s, seed) for s in spec.split("+")], seed)
    head, *args = spec.split(":")
    vals = [float(a) for a in args]
    if head == "gauss":
        return gaussian_noise(*(vals or [1.0]))
    if head == "t":
        if not vals:
            raise ValueError("t noise needs a df, e.g. t:2")
        return student_t_noise(vals[0])
    if head == "scaled-t":
        if len(vals) != 2:
            raise ValueError("scaled-t noise needs sigma and df, e.g. scaled-t:2:2")
        return scaled_t_noise(vals[0], vals[1])
    if head == "cauchy":
        return cauchy_noise(*(vals or [1.0]))
    if head == "ceil-t":
        if len(vals) != 2:
            raise ValueError("ceil-t noise needs scale and df, e.g. ceil-t:3:2")
        return discrete_ceil_t_noise(vals[0], vals[1])
    raise ValueError(f"cannot parse noise spec {spec!r}")


@dataclass(frozen=True)
class QuadratureInfo:
    hermite_order: int
    n_w_nodes: int
    w_seed: int | None
    noise_label: str


@dataclass
class SystemSolution:
    alpha: float
    kappa: float
    residual_norm: float
    iterations: int
    quadrature: QuadratureInfo

    @property
    def alpha_sq(self) -> float:
        return self.alpha**2


def system_residuals(
    alpha: float,
    kappa: float,
    loss: ScaledLoss,
    noise: NoiseModel,
    gamma: float,
    hermite_order: int = 81,
) -> tuple[float, float]:
    """Residuals (r1, r2) of the two moment equations at (alpha, kappa)."""
    z, az = _gauss_hermite(hermite_order)
    w, bw = noise.w_nodes, noise.w_weights
    s = alpha * z[:, None] + w[None, :]
    d = s - prox(loss, kappa, s)
    m = az[:, None] * bw[None, :]
    r1 = float(np.sum(m * d * d)) - alpha**2 * gamma
    r2 = float(np.sum(m * d * z[:, None])) - alpha * gamma
    return r1, r2


def _default_init(noise: NoiseModel) -> tuple[float, float]:
    # IQR-based scale of W; robust to infinite-variance noise
    order = np.argsort(noise.w_nodes)
    cdf = np.cumsum(noise.w_weights[order])
    nodes = noise.w_nodes[order]
    q25 = nodes[np.searchsorted(cdf, 0.25)]
    q75 = nodes[np.searchsorted(cdf, 0.75)]
    alpha0 = max((q75 - q25) / 1.349, 0.05)
    return alpha0, 1.0


_RETRY_FACTORS = [
    (4.0, 1.0), (0.25, 1.0), (1.0, 4.0), (1.0, 0.25),
    (4.0, 4.0), (0.25, 0.25), (4.0, 0.25), (0.25, 4.0),
]


def solve_system(
    loss: ScaledLoss,
    noise: NoiseModel,
    gamma: float,
    init: tuple[float, float] | None = None,
    hermite_order: int = 81,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> SystemSolution:
    """Solve the system by damped Newton in (log alpha, log kappa).

    The Jacobian is forward-differenced with relative step 1e-6.  On failure
    the solve retries from 8 multiplicative perturbations of the initial
    point before raising SystemSolveError with the best residual seen.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    base_init = init if init is not None else _default_init(noise)
    starts = [base_init] + [
        (base_init[0] * fa, base_init[1] * fk) for fa, fk in _RETRY_FACTORS
    ]
    best = np.inf
    for alpha0, kappa0 in starts:
        sol = _newton_root(loss, noise, gamma, alpha0, kappa0, hermite_order, tol, max_iter)
        if sol is not None:
            return sol
        # _newton_root stores its best residual on the function for reporting
        best = min(best, _newton_root.last_residual)
    raise SystemSolveError(
        f"system solve failed for lambda={loss.lam:g}, noise={noise.label}, "
        f"gamma={gamma:g}; best residual {best:.3e} "
        "(the pair may be near the existence boundary)",
        best_residual=best,
    )


def _newton_root(loss, noise, gamma, alpha0, kappa0, hermite_order, tol, max_iter):
    theta = np.log([alpha0, kappa0])

    def resid(th):
        a, k = np.exp(th)
        return np.array(system_residuals(a, k, loss, noise, gamma, hermite_order))

    f = resid(theta)
    _newton_root.last_residual = float(np.max(np.abs(f)))
    for it in range(max_iter):
        if np.max(np.abs(f)) <= tol:
            a, k = np.exp(theta)
            return SystemSolution(
                alpha=float(a),
                kappa=float(k),
                residual_norm=float(np.max(np.abs(f))),
                iterations=it,
                quadrature=QuadratureInfo(
                    hermite_order, noise.w_nodes.shape[0], noise.seed, noise.label
                ),
            )
        jac = np.empty((2, 2))
        for j in range(2):
            h = 1e-6 * max(1.0, abs(theta[j]))
            bumped = theta.copy()
            bumped[j] += h
            jac[:, j] = (resid(bumped) - f) / h
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None
        norm0 = np.linalg.norm(f)
        t = 1.0
        for _ in range(40):
            cand = theta + t * step
            if np.all(np.abs(cand) < 50):  # keep exp() in range
                f_cand = resid(cand)
                if np.linalg.norm(f_cand) < norm0 * (1.0 - 1e-4 * t):
                    theta, f = cand, f_cand
                    break
            t *= 0.5
        else:
            _newton_root.last_residual = min(_newton_root.last_residual, norm0)
            return None
        _newton_root.last_residual = min(
            _newton_root.last_residual, float(np.max(np.abs(f)))
        )
    return None


_newton_root.last_residual = np.inf


@dataclass
class CurvePoint:
    lam: float
    alpha_sq: float
    kappa: float
    residual_norm: float
    failed: bool = False


def alpha_curve(
    base: BaseLoss,
    noise: NoiseModel,
    gamma: float,
    grid: LambdaGrid,
    hermite_order: int = 81,
) -> list[CurvePoint]:
    """alpha^2(lambda) along an ascending grid with warm-started solves.

    Per-lambda failures are returned as flagged points; the sweep never
    aborts.
    """
    points: list[CurvePoint] = []
    warm: tuple[float, float] | None = None
    for lam in grid.points():
        loss = ScaledLoss(base, float(lam))
        try:
            sol = solve_system(loss, noise, gamma, init=warm, hermite_order=hermite_order)
        except SystemSolveError as exc:
            points.append(CurvePoint(float(lam), np.nan, np.nan,
                                     float(exc.best_residual or np.nan), failed=True))
            continue
        warm = (sol.alpha, sol.kappa)
        points.append(CurvePoint(float(lam), sol.alpha_sq, sol.kappa, sol.residual_norm))
    return points
