"""Matplotlib figure rendering for evaluation reports and parameter history."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def plot_eval_metrics(report, path) -> Path:
    """Per-repeat RMSE/MAE bars with the fold-average lines."""
    path = Path(path)
    repeats = range(1, len(report.per_repeat) + 1)
    rmses = [r.rmse for r in report.per_repeat]
    maes = [r.mae for r in report.per_repeat]

    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.38
    ax.bar([x - width / 2 for x in repeats], rmses, width, label="RMSE [ppl]")
    ax.bar([x + width / 2 for x in repeats], maes, width, label="MAE [ppl]")
    ax.axhline(report.rmse, color="C0", linestyle="--", linewidth=1)
    ax.axhline(report.mae, color="C1", linestyle="--", linewidth=1)
    ax.set_xlabel("validation fold")
    ax.set_ylabel("error [people]")
    ax.set_title(f"Per-fold errors (avg pct error {report.pct_error:.2f}% of seats)")
    ax.set_xticks(list(repeats))
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_eval_params(report, path) -> Path:
    """Per-repeat calibrated parameters (alpha, beta left axis; theta right)."""
    path = Path(path)
    repeats = list(range(1, len(report.per_repeat) + 1))
    alphas = [r.params.alpha for r in report.per_repeat]
    betas = [r.params.beta for r in report.per_repeat]
    thetas = [r.params.theta_dbm for r in report.per_repeat]

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(repeats, alphas, "o-", label="alpha")
    ax.plot(repeats, betas, "s-", label="beta")
    ax.set_xlabel("validation fold")
    ax.set_ylabel("correction factor")
    ax.set_xticks(repeats)
    ax2 = ax.twinx()
    ax2.plot(repeats, thetas, "^--", color="C2", label="theta [dBm]")
    ax2.set_ylabel("theta [dBm]")
    lines1, labels1 = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(lines1 + lines2, labels1 + labels2, loc="best")
    ax.set_title("Calibrated parameters per fold")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_params_history(entries: Sequence[dict], path) -> Path:
    """Convergence chart from a params-update series ({alpha, beta, theta_dbm, ts})."""
    path = Path(path)
    ts = [e["ts"] for e in entries]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax1.step(ts, [e["alpha"] for e in entries], where="post", label="alpha")
    ax1.step(ts, [e["beta"] for e in entries], where="post", label="beta")
    ax1.set_ylabel("correction factor")
    ax1.legend()
    ax2.step(ts, [e["theta_dbm"] for e in entries], where="post", color="C2")
    ax2.set_ylabel("theta [dBm]")
    ax2.set_xlabel("time [s]")
    ax1.set_title("Parameter convergence")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
