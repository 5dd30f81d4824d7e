"""Figure rendering for experiment outputs.

Figures are written next to the CSV files they are drawn from: a log-log
convergence plot of the per-checkpoint deviation gaps (mean with a standard
deviation band, worst player per kind) and a social-welfare scatter for
two-player games.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

GAP_STYLES = {"efce": "tab:blue", "efcce": "tab:orange", "nfcce": "tab:green"}


def convergence_figure(aggregate_csv, out_path) -> Path:
    rows = []
    with open(aggregate_csv, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append(row)

    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for kind, color in GAP_STYLES.items():
        per_t: dict[int, tuple[float, float]] = {}
        for row in rows:
            if not row.get(f"mean_{kind}"):
                continue
            t = int(row["t"])
            mean = float(row[f"mean_{kind}"])
            std = float(row[f"std_{kind}"])
            if t not in per_t or mean > per_t[t][0]:
                per_t[t] = (mean, std)   # worst player at this checkpoint
        if not per_t:
            continue
        ts = sorted(per_t)
        means = [per_t[t][0] for t in ts]
        stds = [per_t[t][1] for t in ts]
        ax.plot(ts, means, color=color, marker="o", markersize=3, label=kind.upper())
        lo = [max(m - s, 1e-12) for m, s in zip(means, stds)]
        hi = [m + s for m, s in zip(means, stds)]
        ax.fill_between(ts, lo, hi, color=color, alpha=0.2, linewidth=0)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("iterations")
    ax.set_ylabel("maximum deviation gap")
    ax.legend(frameon=False)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return Path(out_path)


def welfare_figure(welfare_csv, out_path) -> Path:
    xs, ys = [], []
    with open(welfare_csv, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            xs.append(float(row["u_player1"]))
            ys.append(float(row["u_player2"]))

    fig, ax = plt.subplots(figsize=(4.2, 4.0))
    ax.scatter(xs, ys, s=14, color="black", alpha=0.8)
    ax.set_xlabel("player 1 utility")
    ax.set_ylabel("player 2 utility")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return Path(out_path)
