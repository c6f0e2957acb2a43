"""Delimited tables and figures for the evaluation report.

Everything here is presentation only; the numbers come from the caller.
Figures are rendered with the Agg backend so runs are headless and the
output bytes stay reproducible.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIG_DPI = 100


def write_metrics_csv(metrics: dict, path: str) -> None:
    """One row per sequence: jaccard, levenshtein and segment counts."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sequence", "jaccard", "levenshtein", "n_predicted", "n_truth"])
        for row in metrics["per_sequence"]:
            writer.writerow(
                [row["name"], row["jaccard"], row["levenshtein"], row["n_predicted"], row["n_truth"]]
            )


def write_records_csv(metrics: dict, path: str) -> None:
    """One row per matched segment: predicted vs truth label."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sequence", "predicted", "truth", "correct"])
        for row in metrics["per_sequence"]:
            for predicted, truth in row["records"]:
                writer.writerow([row["name"], predicted, truth, int(predicted == truth)])


def render_qom_profile(profile, threshold: float, boundaries, path: str) -> None:
    """Plot a stream's movement profile with the learned threshold and cuts."""
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(np.arange(1, len(profile) + 1), profile, lw=1.0, color="#1f77b4")
    ax.axhline(threshold, color="#d62728", lw=1.0, ls="--", label="boundary threshold")
    for b in boundaries:
        ax.axvline(b, color="#2ca02c", lw=0.8, alpha=0.7)
    ax.set_xlabel("frame")
    ax.set_ylabel("moved pixels")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)


def render_jaccard_figure(metrics: dict, path: str) -> None:
    """Bar chart of per-sequence Jaccard with the mean drawn across."""
    rows = metrics["per_sequence"]
    names = [row["name"] for row in rows]
    values = [row["jaccard"] for row in rows]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(rows) + 2.0), 3.2))
    ax.bar(np.arange(len(rows)), values, color="#1f77b4")
    ax.axhline(metrics["mean_jaccard"], color="#d62728", lw=1.0, ls="--", label="mean")
    ax.set_xticks(np.arange(len(rows)))
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=7)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("Jaccard")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)


def render_confusion_figure(records, path: str) -> None:
    """Heatmap of predicted vs truth labels over all matched segments."""
    pairs = [(int(p), int(t)) for p, t in records]
    labels = sorted({p for p, _ in pairs} | {t for _, t in pairs})
    index = {c: i for i, c in enumerate(labels)}
    grid = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for p, t in pairs:
        grid[index[t], index[p]] += 1

    fig, ax = plt.subplots(figsize=(3.2 + 0.3 * len(labels), 2.8 + 0.3 * len(labels)))
    im = ax.imshow(grid, cmap="Blues")
    ax.set_xticks(np.arange(len(labels)))
    ax.set_yticks(np.arange(len(labels)))
    ax.set_xticklabels(labels)
    ax.set_yticklabels(labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("truth")
    for i in range(len(labels)):
        for j in range(len(labels)):
            color = "white" if grid[i, j] > grid.max() / 2 else "black"
            ax.text(j, i, str(grid[i, j]), ha="center", va="center", color=color, fontsize=8)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)
