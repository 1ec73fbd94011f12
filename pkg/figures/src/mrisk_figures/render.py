"""Render experiment-CSV figures.

Input CSVs follow the mrisk ExperimentRecord schema:

    seed, rep_index, n, p, gamma, lambda, R, R_hat, alpha_sq, trace_v,
    wall_time_ms, noise, design

Six figure kinds are supported:

    risk_curve      R and R_hat per lambda with the alpha^2(lambda) overlay
    relative_error  boxplots of |R_hat/R - 1| per lambda
    tuning_vs_sigma selected-risk / best-grid-risk / best-theory markers
                    per noise scale sigma
    gamma_sweep     relative error against the aspect ratio gamma
    n_sweep         R_hat spread shrinking with the sample size
    universality    relative error across covariate designs

Inputs are never modified; outputs overwrite their target path.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

FIGURE_KINDS = ("risk_curve", "relative_error", "tuning_vs_sigma",
                "gamma_sweep", "n_sweep", "universality")

_REQUIRED = {
    "risk_curve": ["lambda", "R", "R_hat"],
    "relative_error": ["lambda", "R", "R_hat"],
    "tuning_vs_sigma": ["rep_index", "lambda", "R", "R_hat", "noise"],
    "gamma_sweep": ["gamma", "R", "R_hat"],
    "n_sweep": ["n", "R_hat"],
    "universality": ["design", "R", "R_hat"],
}


class SchemaError(ValueError):
    """The input CSV does not carry the columns a figure kind needs."""


@dataclass
class FigureSpec:
    kind: str
    input_csv: str
    output_image: str
    title: str | None = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(
                f"unknown figure kind {self.kind!r}; choose from {FIGURE_KINDS}"
            )

    @classmethod
    def from_toml(cls, path: str) -> "FigureSpec":
        import tomli

        with open(path, "rb") as fh:
            raw = tomli.load(fh)
        return cls(**raw)


def load_records(path: str, kind: str) -> pd.DataFrame:
    df = pd.read_csv(path)
    missing = [c for c in _REQUIRED[kind] if c not in df.columns]
    if missing:
        raise SchemaError(
            f"{path} is missing columns required by {kind}: {missing}"
        )
    return df


def relative_errors(df: pd.DataFrame) -> pd.Series:
    ok = np.isfinite(df["R"]) & np.isfinite(df["R_hat"]) & (df["R"] > 0)
    return (df.loc[ok, "R_hat"] / df.loc[ok, "R"] - 1.0).abs()


def sigma_from_noise(label: str) -> float:
    """Noise scale from a spec label such as "scaled-t:2:2" or "gauss:1.5"."""
    m = re.match(r"(?:scaled-t|gauss|cauchy|t|ceil-t):([0-9.eE+-]+)", label)
    if not m:
        raise SchemaError(f"cannot read a noise scale from label {label!r}")
    return float(m.group(1))


def tuning_summary(df: pd.DataFrame) -> pd.DataFrame:
    """One row per noise scale: median selected risk R(lambda_hat), median
    best grid risk, and the best theoretical risk when available."""
    rows = []
    for noise, group in df.groupby("noise"):
        sigma = sigma_from_noise(str(noise))
        selected, best = [], []
        for _, rep in group.groupby("rep_index"):
            usable = rep[np.isfinite(rep["R_hat"]) & np.isfinite(rep["R"])]
            if usable.empty:
                continue
            selected.append(usable.loc[usable["R_hat"].idxmin(), "R"])
            best.append(usable["R"].min())
        alpha_best = np.nan
        if "alpha_sq" in group.columns and group["alpha_sq"].notna().any():
            alpha_best = float(group["alpha_sq"].min())
        rows.append({
            "sigma": sigma,
            "selected_risk": float(np.median(selected)),
            "best_grid_risk": float(np.median(best)),
            "best_theory_risk": alpha_best,
        })
    return pd.DataFrame(rows).sort_values("sigma").reset_index(drop=True)


def _finish(fig, ax, spec, default_title):
    ax.set_title(spec.title or default_title)
    fig.tight_layout()
    fig.savefig(spec.output_image, dpi=120)
    plt.close(fig)


def _render_risk_curve(df, spec):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.scatter(df["lambda"], df["R"], s=8, alpha=0.25, color="tab:blue",
               label="R (out-of-sample error)")
    ax.scatter(df["lambda"], df["R_hat"], s=8, alpha=0.25, color="tab:orange",
               label="R_hat (estimate)")
    med = df.groupby("lambda")[["R", "R_hat"]].median().reset_index()
    ax.plot(med["lambda"], med["R"], color="tab:blue", lw=1.5)
    ax.plot(med["lambda"], med["R_hat"], color="tab:orange", lw=1.5, ls="--")
    if "alpha_sq" in df.columns and df["alpha_sq"].notna().any():
        curve = (df.dropna(subset=["alpha_sq"])
                   .groupby("lambda")["alpha_sq"].first().reset_index())
        ax.plot(curve["lambda"], curve["alpha_sq"], color="black", lw=1.8,
                label="alpha^2 (theory)")
    ax.set_xscale("log")
    ax.set_xlabel("lambda")
    ax.set_ylabel("risk")
    ax.legend(fontsize=8)
    _finish(fig, ax, spec, "Out-of-sample error and its estimate")


def _render_relative_error(df, spec):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    lams = sorted(df["lambda"].unique())
    groups = [relative_errors(df[df["lambda"] == lam]).values for lam in lams]
    ax.boxplot(groups, tick_labels=[f"{lam:g}" for lam in lams])
    ax.set_xlabel("lambda")
    ax.set_ylabel("|R_hat / R - 1|")
    ax.tick_params(axis="x", labelrotation=60, labelsize=7)
    _finish(fig, ax, spec, "Relative error of the risk estimate")


def _render_tuning_vs_sigma(df, spec):
    summary = tuning_summary(df)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(summary["sigma"], summary["selected_risk"], "o-",
            label="R(lambda_hat)")
    ax.plot(summary["sigma"], summary["best_grid_risk"], "s--",
            label="min R over grid")
    if summary["best_theory_risk"].notna().any():
        ax.plot(summary["sigma"], summary["best_theory_risk"], "k^:",
                label="min alpha^2")
    ax.set_xlabel("noise scale sigma")
    ax.set_ylabel("risk")
    ax.legend(fontsize=8)
    _finish(fig, ax, spec, "Adaptive tuning against the oracle")


def _render_gamma_sweep(df, spec):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    gammas = sorted(df["gamma"].unique())
    groups = [relative_errors(df[df["gamma"] == g]).values for g in gammas]
    ax.boxplot(groups, tick_labels=[f"{g:g}" for g in gammas])
    ax.set_xlabel("gamma = p/n")
    ax.set_ylabel("|R_hat / R - 1|")
    _finish(fig, ax, spec, "Estimate degradation as gamma approaches 1")


def _render_n_sweep(df, spec):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ns = sorted(df["n"].unique())
    groups = [df.loc[df["n"] == n, "R_hat"].dropna().values for n in ns]
    ax.boxplot(groups, tick_labels=[str(n) for n in ns])
    ax.set_xlabel("n")
    ax.set_ylabel("R_hat")
    _finish(fig, ax, spec, "Estimate spread across sample sizes")


def _render_universality(df, spec):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    designs = sorted(df["design"].unique())
    groups = [relative_errors(df[df["design"] == d]).values for d in designs]
    ax.boxplot(groups, tick_labels=designs)
    ax.set_xlabel("covariate design")
    ax.set_ylabel("|R_hat / R - 1|")
    ax.tick_params(axis="x", labelsize=8)
    _finish(fig, ax, spec, "Risk estimation across covariate designs")


_RENDERERS = {
    "risk_curve": _render_risk_curve,
    "relative_error": _render_relative_error,
    "tuning_vs_sigma": _render_tuning_vs_sigma,
    "gamma_sweep": _render_gamma_sweep,
    "n_sweep": _render_n_sweep,
    "universality": _render_universality,
}


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path."""
    df = load_records(spec.input_csv, spec.kind)
    out_dir = os.path.dirname(os.path.abspath(spec.output_image))
    os.makedirs(out_dir, exist_ok=True)
    _RENDERERS[spec.kind](df, spec)
    return spec.output_image
