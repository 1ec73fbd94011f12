import csv
import os

import numpy as np
import pytest

COLUMNS = ("seed", "rep_index", "n", "p", "gamma", "lambda", "R", "R_hat",
           "alpha_sq", "trace_v", "wall_time_ms", "noise", "design")

ACCEPTANCE_DIR = os.path.abspath(
    os.path.join(os.path.dirname(__file__), "..", "..", "results", "acceptance")
)


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        writer.writerows(rows)
    return str(path)


def make_row(rep=0, n=400, p=120, lam=1.0, R=1.0, R_hat=1.0, alpha_sq="",
             noise="t:2", design="gaussian", gamma=None):
    return [7, rep, n, p, gamma if gamma is not None else p / n, lam, R,
            R_hat, alpha_sq, 10.0, 1.0, noise, design]


@pytest.fixture
def synth_sweep_csv(tmp_path):
    """3 reps x 4 lambdas with an alpha_sq column."""
    rng = np.random.default_rng(0)
    rows = []
    for rep in range(3):
        for lam in (1.0, 2.0, 5.0, 10.0):
            base = 1.0 + 0.1 * lam
            rows.append(make_row(rep=rep, lam=lam,
                                 R=base * (1 + 0.05 * rng.standard_normal()),
                                 R_hat=base * (1 + 0.05 * rng.standard_normal()),
                                 alpha_sq=base))
    return write_rows(tmp_path / "sweep.csv", rows)


@pytest.fixture
def synth_tuning_csv(tmp_path):
    rng = np.random.default_rng(1)
    rows = []
    for sigma in (1.0, 2.0, 3.0):
        for rep in range(3):
            for lam in (1.0, 2.0, 5.0):
                base = sigma * (1.0 + 0.2 * abs(lam - 2.0))
                rows.append(make_row(
                    rep=rep, lam=lam, noise=f"scaled-t:{sigma:g}:2",
                    R=base * (1 + 0.05 * rng.standard_normal()),
                    R_hat=base * (1 + 0.05 * rng.standard_normal()),
                    alpha_sq=base))
    return write_rows(tmp_path / "tuning.csv", rows)
