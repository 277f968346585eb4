"""Figure rendering for the report path.

Every figure is written next to the delimited output it visualizes:
reputation trajectories per node (adversaries dashed), per-round C-index
method comparisons, sweep trend curves, and the message-overhead /
accuracy trade-off as a dual-axis plot.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def reputation_figure(node_scores: pd.DataFrame, adversaries,
                      path: str | Path, title: str = "reputation") -> Path:
    """Aggregate score per node over rounds; adversarial nodes dashed."""
    adversaries = set(adversaries)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for node, group in node_scores.groupby("node"):
        style = "--" if node in adversaries else "-"
        label = f"node {node}" + (" (noisy)" if node in adversaries else "")
        ax.plot(group["round"], group["score"], style, label=label)
    ax.set_xlabel("round")
    ax.set_ylabel("mean reputation score")
    ax.set_title(title)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def comparison_figure(table: pd.DataFrame, path: str | Path) -> Path:
    """Per-round global C-index, one line per method."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for column in table.columns:
        ax.plot(table.index, table[column], marker="o", label=column)
    ax.set_xlabel("round")
    ax.set_ylabel("global c-index")
    ax.set_title("aggregation strategy comparison")
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def trend_figure(agg: pd.DataFrame, parameter: str,
                 path: str | Path) -> Path:
    """Final C-index (mean +/- sd across seeds) against a sweep axis."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    x = agg["value"]
    ax.errorbar(x, agg["final_c_index_mean"],
                yerr=agg["final_c_index_std"].fillna(0.0),
                marker="o", capsize=3)
    ax.set_xlabel(parameter)
    ax.set_ylabel("final global c-index")
    ax.set_title(f"sweep over {parameter}")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def overhead_figure(agg: pd.DataFrame, path: str | Path) -> Path:
    """Messages (left axis) vs final C-index (right axis) against frequency."""
    fig, ax_left = plt.subplots(figsize=(6.5, 4.5))
    x = agg["value"]
    ax_left.plot(x, agg["total_messages_mean"], "o-", color="tab:blue",
                 label="total messages")
    ax_left.set_xlabel("reputation update frequency")
    ax_left.set_ylabel("total messages", color="tab:blue")
    ax_left.tick_params(axis="y", labelcolor="tab:blue")
    ax_right = ax_left.twinx()
    ax_right.plot(x, agg["final_c_index_mean"], "s--", color="tab:red",
                  label="final c-index")
    ax_right.set_ylabel("final global c-index", color="tab:red")
    ax_right.tick_params(axis="y", labelcolor="tab:red")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
