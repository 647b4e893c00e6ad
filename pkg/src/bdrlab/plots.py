"""Figure rendering for the reporting paths (headless, file output only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_pareto_plot(points, frontier, path, title="Fidelity vs. cost") -> str:
    """Scatter all design points and overlay the Pareto frontier."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.scatter([p.combined for p in points], [p.qsnr_db for p in points],
               s=12, alpha=0.45, color="#5b7fa6", label="all configurations")
    fr = sorted(frontier, key=lambda p: p.combined)
    ax.plot([p.combined for p in fr], [p.qsnr_db for p in fr],
            marker="o", color="#c0392b", lw=1.6, ms=4, label="Pareto frontier")
    for p in fr:
        if not p.name.startswith("m"):  # label the named presets only
            ax.annotate(p.name, (p.combined, p.qsnr_db), fontsize=7,
                        textcoords="offset points", xytext=(4, 4))
    ax.set_xlabel("combined cost (area x memory, FP8 = 1)")
    ax.set_ylabel("QSNR (dB)")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def save_qsnr_hist(db_values, path, title="Per-vector QSNR") -> str:
    """Histogram of per-vector QSNR samples."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.hist(db_values, bins=40, color="#5b7fa6", edgecolor="white")
    ax.set_xlabel("QSNR (dB)")
    ax.set_ylabel("vectors")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
