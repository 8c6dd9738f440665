"""Matplotlib figures for the consolidated report. Files only, no display."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def metric_by_budget(summary: list[dict], metric: str, path) -> None:
    """One line per setting: mean metric (with std bars) against budget."""
    fig, ax = plt.subplots(figsize=(6, 4))
    settings = sorted({r["setting"] for r in summary})
    for s in settings:
        rows = sorted((r for r in summary if r["setting"] == s and r[f"{metric}_mean"] is not None),
                      key=lambda r: r["budget"])
        if not rows:
            continue
        x = [100 * r["budget"] for r in rows]
        ax.errorbar(x, [r[f"{metric}_mean"] for r in rows], yerr=[r[f"{metric}_std"] for r in rows],
                    marker="o", capsize=3, label=f"setting {s}")
    ax.set_xlabel("budget (% of users labeled)")
    ax.set_ylabel(metric.upper())
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    _save(fig, path)


def curves(table: dict, xlabel: str, ylabel: str, path) -> None:
    """table: label -> (x values, y values)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (x, y) in table.items():
        ax.plot(x, y, label=label, lw=1.2, marker="o" if len(x) <= 20 else None)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_ylim(0, 1.02)
    if table:
        ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    _save(fig, path)


def oracle_heatmap(k1_values, k2_values, auc, path) -> None:
    """AUC over the k1 (same-class) x k2 (cross-class) neighbor grid."""
    auc = np.asarray(auc, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(auc, origin="lower", vmin=0.5, vmax=1.0, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(k2_values)), [str(k) for k in k2_values])
    ax.set_yticks(range(len(k1_values)), [str(k) for k in k1_values])
    ax.set_xlabel("k2 (cross-class neighbors kept)")
    ax.set_ylabel("k1 (same-class neighbors kept)")
    for i in range(auc.shape[0]):
        for j in range(auc.shape[1]):
            ax.text(j, i, f"{auc[i, j]:.2f}", ha="center", va="center", fontsize=7,
                    color="w" if auc[i, j] < 0.8 else "k")
    fig.colorbar(im, ax=ax, label="AUC")
    _save(fig, path)
