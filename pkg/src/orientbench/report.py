"""Figure rendering for benchmark outputs.

Figures are a courtesy layer on top of the CSVs (the CSVs remain the
machine-readable contract); they land in the same output directory.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

_STYLE = {"bingham": "C0", "ukf": "C1", "pf": "C2"}


def render_figures(out_dir, per_step_mean, summary):
    """Write error-curve and summary-bar figures; returns the file paths."""
    paths = []

    fig, ax = plt.subplots(figsize=(7, 4))
    for name, curve in per_step_mean.items():
        ax.plot(
            range(1, len(curve) + 1), curve, color=_STYLE.get(name), label=name
        )
    ax.set_xlabel("step")
    ax.set_ylabel("mean angular error [rad]")
    ax.set_title("error vs. step (mean over runs)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    p = os.path.join(out_dir, "error_curves.png")
    fig.savefig(p, dpi=130)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(7, 4))
    names = list(summary.keys())
    stats = ("mean_err", "median_err", "p90_err")
    width = 0.25
    for k, stat in enumerate(stats):
        xs = [i + (k - 1) * width for i in range(len(names))]
        ax.bar(
            xs,
            [summary[n][stat] for n in names],
            width=width,
            label=stat,
        )
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names)
    ax.set_ylabel("angular error [rad]")
    ax.set_title("summary statistics")
    ax.legend()
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    p = os.path.join(out_dir, "summary_bars.png")
    fig.savefig(p, dpi=130)
    plt.close(fig)
    paths.append(p)
    return paths
