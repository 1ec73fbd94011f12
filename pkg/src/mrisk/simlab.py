"""Simulation lab: data generation, experiment runners, CSV persistence.

Every experiment writes one CSV row per (repetition, lambda) with the schema

    seed, rep_index, n, p, gamma, lambda, R, R_hat, alpha_sq, trace_v,
    wall_time_ms, noise, design

where R is the oracle out-of-sample error, R_hat its observable estimate,
and alpha_sq the theoretical limit when requested (blank otherwise).  Runs
are reproducible: per-repetition streams are spawned from the experiment
seed through a counter-based generator, so results are independent of
scheduling, and the CSV bytes are identical across runs up to the wall-time
column.
"""
from __future__ import annotations

import csv
import math
import os
import tempfile
import time
from dataclasses import dataclass, fields

import numpy as np
from joblib import Parallel, delayed

from .asymptotic import NoiseModel, alpha_curve, parse_noise
from .losses import ScaledLoss, base_loss
from .risk import estimate_risk, oracle_risk
from .solver import Dataset, FitOptions, fit
from .tuning import LambdaGrid

EXPERIMENTS = (
    "risk_consistency",
    "adaptive_tuning",
    "universality",
    "gamma_sweep",
    "n_sweep",
    "vanishing_smooth",
    "nonsmooth_noise",
)

CSV_COLUMNS = (
    "seed", "rep_index", "n", "p", "gamma", "lambda", "R", "R_hat",
    "alpha_sq", "trace_v", "wall_time_ms", "noise", "design",
)


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 2000
    p: int = 600
    noise: str = "t:2"
    design: str = "gaussian"
    loss: str = "huber"
    lam: float | None = None
    lambda_min: float = 1.0
    lambda_max: float = 10.0
    lambda_points: int = 11
    lambdas: tuple = ()  # explicit list; overrides the geometric grid
    repetitions: int = 20
    seed: int = 0
    output_path: str = "experiment.csv"
    with_alpha: bool = True
    sigma_grid: tuple = (1.0, 2.0, 3.0)        # adaptive_tuning
    gamma_grid: tuple = (0.25, 0.5, 0.8, 0.95) # gamma_sweep
    n_grid: tuple = (500, 2000)                # n_sweep
    designs: tuple = ("gaussian", "rademacher", "uniform", "student_t:4")
    beta_star: str = "zero"
    n_jobs: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}"
            )
        if not self.p < self.n:
            raise ValueError("need p < n")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    def grid(self) -> LambdaGrid:
        return LambdaGrid(self.lambda_min, self.lambda_max, self.lambda_points)

    @classmethod
    def from_toml(cls, path: str) -> "ExperimentConfig":
        import tomli

        with open(path, "rb") as fh:
            raw = tomli.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("sigma_grid", "gamma_grid", "n_grid", "designs", "lambdas"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(**raw)

    def lambda_values(self) -> list:
        if self.lambdas:
            return [float(x) for x in self.lambdas]
        if self.lam is not None:
            return [float(self.lam)]
        return [float(x) for x in self.grid().points()]


@dataclass
class ExperimentRecord:
    seed: int
    rep_index: int
    n: int
    p: int
    gamma: float
    lam: float
    R: float
    R_hat: float
    alpha_sq: float | None
    trace_v: float
    wall_time_ms: float
    noise: str
    design: str

    def to_row(self):
        return [
            self.seed, self.rep_index, self.n, self.p,
            repr(self.gamma), repr(self.lam),
            repr(self.R), repr(self.R_hat),
            "" if self.alpha_sq is None else repr(self.alpha_sq),
            repr(self.trace_v), f"{self.wall_time_ms:.3f}",
            self.noise, self.design,
        ]


def _design_matrix(rng: np.random.Generator, n: int, p: int, design: str) -> np.ndarray:
    # entries normalized to variance 1
    if design == "gaussian":
        return rng.standard_normal((n, p))
    if design == "rademacher":
        return (rng.integers(0, 2, size=(n, p)) * 2 - 1).astype(float)
    if design == "uniform":
        return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=(n, p))
    if design.startswith("student_t:"):
        df = float(design.split(":")[1])
        if df <= 2:
            raise ValueError("design t-distribution needs df > 2 for unit variance")
        return rng.standard_t(df, size=(n, p)) * math.sqrt((df - 2.0) / df)
    raise ValueError(f"unknown design {design!r}")


def _beta_star(rng: np.random.Generator, p: int, spec: str) -> np.ndarray:
    if spec == "zero":
        return np.zeros(p)
    if spec.startswith("randn"):
        norm = float(spec.split(":")[1]) if ":" in spec else 1.0
        b = rng.standard_normal(p)
        return b * (norm / np.linalg.norm(b))
    raise ValueError(f"unknown beta_star spec {spec!r}")


def generate_dataset(
    n: int,
    p: int,
    design: str,
    beta_star_spec: str,
    noise: NoiseModel | str,
    seed,
) -> Dataset:
    """Synthetic dataset y = X beta_star + eps, reproducible from the seed.

    ``seed`` may be an int or a numpy SeedSequence (experiment runners spawn
    one per repetition).  Design, noise, and beta_star draw from independent
    child streams so that e.g. changing beta_star keeps (X, eps) fixed.
    """
    if isinstance(noise, str):
        noise = parse_noise(noise)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    kids = ss.spawn(3)
    rng_x = np.random.Generator(np.random.Philox(kids[0]))
    rng_e = np.random.Generator(np.random.Philox(kids[1]))
    rng_b = np.random.Generator(np.random.Philox(kids[2]))
    X = _design_matrix(rng_x, n, p, design)
    beta = _beta_star(rng_b, p, beta_star_spec)
    eps = noise.sample(rng_e, n)
    return Dataset(X, X @ beta + eps, beta_star=beta)


def write_records_csv(path: str, records: list) -> None:
    """Atomic CSV write (temp file + rename) with the fixed column header."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".csv.tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for rec in records:
                writer.writerow(rec.to_row())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_records_csv(path: str) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        out = []
        for row in reader:
            out.append(ExperimentRecord(
                seed=int(row["seed"]),
                rep_index=int(row["rep_index"]),
                n=int(row["n"]),
                p=int(row["p"]),
                gamma=float(row["gamma"]),
                lam=float(row["lambda"]),
                R=float(row["R"]),
                R_hat=float(row["R_hat"]),
                alpha_sq=float(row["alpha_sq"]) if row["alpha_sq"] else None,
                trace_v=float(row["trace_v"]),
                wall_time_ms=float(row["wall_time_ms"]),
                noise=row["noise"],
                design=row["design"],
            ))
        return out


def _alpha_lookup(cfg, noise, lams):
    """alpha^2 per lambda from the asymptotic system (nan on per-point failure)."""
    base = base_loss(cfg.loss)
    grid_like = _ListGrid(tuple(float(x) for x in lams))
    pts = alpha_curve(base, noise, cfg.p / cfg.n, grid_like)
    return {pt.lam: (np.nan if pt.failed else pt.alpha_sq) for pt in pts}


class _ListGrid:
    """Adapter exposing an explicit lambda list through the grid interface."""

    def __init__(self, lams):
        self._lams = lams

    def points(self):
        return np.asarray(self._lams)


def _sweep_one_rep(cfg, noise, design, rep_index, child_seed, lams, alpha_by_lam,
                   n=None, p=None):
    n = n or cfg.n
    p = p or cfg.p
    data = generate_dataset(n, p, design, cfg.beta_star, noise, child_seed)
    base = base_loss(cfg.loss)
    opts = FitOptions()
    records = []
    beta0 = None
    first = True
    for lam in lams:
        t0 = time.perf_counter()
        loss = ScaledLoss(base, float(lam))
        try:
            res = fit(data, loss, opts, beta0=beta0, check_rank=first)
            first = False
            if res.converged:
                beta0 = res.beta_hat
                est = estimate_risk(res, data, loss)
                r = oracle_risk(res, data)
                r_hat, tv = est.r_hat, est.trace_v
            else:
                r, r_hat, tv = np.nan, np.inf, np.nan
        except (RuntimeError, ValueError, np.linalg.LinAlgError):
            r, r_hat, tv = np.nan, np.inf, np.nan
        ms = (time.perf_counter() - t0) * 1e3
        records.append(ExperimentRecord(
            seed=cfg.seed, rep_index=rep_index, n=n, p=p, gamma=p / n,
            lam=float(lam), R=r, R_hat=r_hat,
            alpha_sq=alpha_by_lam.get(float(lam)) if alpha_by_lam else None,
            trace_v=tv, wall_time_ms=ms, noise=noise.label, design=design,
        ))
    return records


def _run_reps(cfg, task, reps):
    seeds = np.random.SeedSequence(cfg.seed).spawn(reps)
    if cfg.n_jobs != 1:
        chunks = Parallel(n_jobs=cfg.n_jobs)(
            delayed(task)(i, seeds[i]) for i in range(reps)
        )
    else:
        chunks = [task(i, seeds[i]) for i in range(reps)]
    return [rec for chunk in chunks for rec in chunk]


def run_experiment(config: ExperimentConfig, verbose: bool = True) -> list:
    """Dispatch on the experiment kind; write the CSV; print a summary."""
    runner = {
        "risk_consistency": _run_risk_consistency,
        "nonsmooth_noise": _run_nonsmooth_noise,
        "adaptive_tuning": _run_adaptive_tuning,
        "universality": _run_universality,
        "gamma_sweep": _run_gamma_sweep,
        "n_sweep": _run_n_sweep,
        "vanishing_smooth": _run_vanishing_smooth,
    }[config.experiment]
    records = runner(config)
    write_records_csv(config.output_path, records)
    if verbose:
        print(f"wrote {len(records)} rows to {config.output_path}")
        print(summarize(records))
    return records


def _run_risk_consistency(cfg):
    noise = parse_noise(cfg.noise)
    lams = cfg.lambda_values()
    alpha_by_lam = _alpha_lookup(cfg, noise, lams) if cfg.with_alpha else None
    return _run_reps(
        cfg,
        lambda i, s: _sweep_one_rep(cfg, noise, cfg.design, i, s, lams, alpha_by_lam),
        cfg.repetitions,
    )


def _run_nonsmooth_noise(cfg):
    # same sweep as risk_consistency but forcing the integer-valued noise
    noise = parse_noise(cfg.noise if cfg.noise.startswith("ceil-t") else "ceil-t:3:2")
    lams = cfg.lambda_values()
    alpha_by_lam = _alpha_lookup(cfg, noise, lams) if cfg.with_alpha else None
    return _run_reps(
        cfg,
        lambda i, s: _sweep_one_rep(cfg, noise, cfg.design, i, s, lams, alpha_by_lam),
        cfg.repetitions,
    )


def _run_adaptive_tuning(cfg):
    # tuning always sweeps a grid; cfg.lam is ignored here
    records = []
    lams = [float(x) for x in cfg.lambdas] if cfg.lambdas else \
        [float(x) for x in cfg.grid().points()]
    for sigma in cfg.sigma_grid:
        noise = parse_noise(f"scaled-t:{sigma:g}:2")
        alpha_by_lam = _alpha_lookup(cfg, noise, lams) if cfg.with_alpha else None
        records.extend(_run_reps(
            cfg,
            lambda i, s, nz=noise, ab=alpha_by_lam:
                _sweep_one_rep(cfg, nz, cfg.design, i, s, lams, ab),
            cfg.repetitions,
        ))
    return records


def _run_universality(cfg):
    noise = parse_noise(cfg.noise)
    lam = cfg.lam if cfg.lam is not None else 1.0
    alpha_by_lam = _alpha_lookup(cfg, noise, [lam]) if cfg.with_alpha else None
    records = []
    for design in cfg.designs:
        records.extend(_run_reps(
            cfg,
            lambda i, s, dz=design:
                _sweep_one_rep(cfg, noise, dz, i, s, [lam], alpha_by_lam),
            cfg.repetitions,
        ))
    return records


def _run_gamma_sweep(cfg):
    noise = parse_noise(cfg.noise)
    lam = cfg.lam if cfg.lam is not None else 1.0
    records = []
    for gamma in cfg.gamma_grid:
        p = int(round(gamma * cfg.n))
        sub = ExperimentConfig(**{**_asdict(cfg), "p": p})
        alpha_by_lam = _alpha_lookup(sub, noise, [lam]) if cfg.with_alpha else None
        records.extend(_run_reps(
            sub,
            lambda i, s, pp=p, ab=alpha_by_lam:
                _sweep_one_rep(sub, noise, cfg.design, i, s, [lam], ab, p=pp),
            cfg.repetitions,
        ))
    return records


def _run_n_sweep(cfg):
    noise = parse_noise(cfg.noise)
    lam = cfg.lam if cfg.lam is not None else 1.0
    gamma = cfg.p / cfg.n
    records = []
    for n in cfg.n_grid:
        p = int(round(gamma * n))
        sub = ExperimentConfig(**{**_asdict(cfg), "n": n, "p": p})
        alpha_by_lam = _alpha_lookup(sub, noise, [lam]) if cfg.with_alpha else None
        records.extend(_run_reps(
            sub,
            lambda i, s, nn=n, pp=p, ab=alpha_by_lam:
                _sweep_one_rep(sub, noise, cfg.design, i, s, [lam], ab, n=nn, p=pp),
            cfg.repetitions,
        ))
    return records


def _run_vanishing_smooth(cfg):
    # heavy non-smooth noise plus an additive Gaussian whose amplitude
    # vanishes with n (floored at n^{-1/8}), against a fixed-amplitude control
    sigma_n = cfg.n ** (-1.0 / 8.0)
    lam = cfg.lam if cfg.lam is not None else 2.0
    records = []
    for sigma in (sigma_n, 1.0):
        noise = parse_noise(f"ceil-t:3:2+gauss:{sigma:.6g}")
        alpha_by_lam = _alpha_lookup(cfg, noise, [lam]) if cfg.with_alpha else None
        records.extend(_run_reps(
            cfg,
            lambda i, s, nz=noise, ab=alpha_by_lam:
                _sweep_one_rep(cfg, nz, cfg.design, i, s, [lam], ab),
            cfg.repetitions,
        ))
    return records


def _asdict(cfg: ExperimentConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(ExperimentConfig)}


def summarize(records: list) -> str:
    """Median and IQR of the relative error |R_hat/R - 1| per lambda."""
    by_lam: dict[float, list[float]] = {}
    for rec in records:
        if np.isfinite(rec.R_hat) and np.isfinite(rec.R) and rec.R > 0:
            by_lam.setdefault(rec.lam, []).append(abs(rec.R_hat / rec.R - 1.0))
    lines = [f"{'lambda':>10} {'reps':>5} {'med|Rhat/R-1|':>14} {'IQR':>10}"]
    for lam in sorted(by_lam):
        errs = np.asarray(by_lam[lam])
        q1, q3 = np.percentile(errs, [25, 75])
        lines.append(
            f"{lam:>10.4g} {len(errs):>5d} {np.median(errs):>14.4g} {q3 - q1:>10.4g}"
        )
    return "\n".join(lines)


def load_dataset_csv(path: str) -> Dataset:
    """Headerless CSV with the response in column 0 and features after."""
    arr = np.loadtxt(path, delimiter=",", ndmin=2)
    if arr.shape[1] < 2:
        raise ValueError("dataset CSV needs a response column plus features")
    return Dataset(arr[:, 1:], arr[:, 0])
