"""Report figures rendered alongside the delimited output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

RC = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
    "legend.fontsize": 9,
}

METHOD_COLORS = {
    "lsr": "#1f77b4",
    "ilsr": "#ff7f0e",
    "rbm": "#2ca02c",
    "irbm": "#d62728",
    "knn": "#7f7f7f",
}


def save(fig, path):
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)


def rmse_by_method_figure(report):
    """Bar chart of mean normalized RMSE with per-fold scatter."""
    methods = list(report.fold_rmse)
    means = report.mean_rmse()
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        xs = np.arange(len(methods))
        colors = [METHOD_COLORS.get(m, "#555555") for m in methods]
        ax.bar(xs, [means[m] for m in methods], color=colors, alpha=0.75, zorder=2)
        for x, m in zip(xs, methods):
            folds = report.fold_rmse[m]
            ax.plot([x] * len(folds), folds, "k.", ms=5, zorder=3)
        ax.set_xticks(xs)
        ax.set_xticklabels(methods)
        ax.set_ylabel("normalized RMSE")
        ax.set_title(f"mean over {len(report.fold_sizes)} folds  (config {report.config_hash})")
    return fig


def rmse_by_fold_figure(report):
    """Per-fold RMSE trajectories, one line per method."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for m, vals in report.fold_rmse.items():
            ax.plot(
                np.arange(len(vals)),
                vals,
                marker="o",
                label=m,
                color=METHOD_COLORS.get(m, None),
            )
        ax.set_xlabel("fold")
        ax.set_ylabel("normalized RMSE")
        ax.set_xticks(np.arange(len(report.fold_sizes)))
        ax.legend()
        ax.set_title(f"normalized RMSE per fold  (config {report.config_hash})")
    return fig


def render_report_figures(report, out_dir):
    out = Path(out_dir)
    save(rmse_by_method_figure(report), out / "rmse_by_method.png")
    save(rmse_by_fold_figure(report), out / "rmse_by_fold.png")
