"""Render emitted plot tables as matplotlib figures.

Each figure id pairs with the CSV produced by ``emit_plot_data``: the
revenue-vs-sample-size curves get errorbar plots on a log2 axis, the
reserve-distribution table a shared-bin histogram, and the real-data
summary a bar chart.  Files render headlessly (Agg backend).
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .errors import ConfigError

__all__ = ["render_figure"]

_LABELS = {
    "dc": "DC",
    "cvx": "CVX",
    "ridge": "Reg",
    "nofeat": "NoFeat",
    "no_reserve": "NR",
    "highest_bid": "HB",
}

_TITLES = {
    "fig6a": "Synthetic bids, noise 0",
    "fig6b": "Synthetic bids, noise 0.25",
    "fig6c": "Synthetic bids, noise 0.5",
    "fig6d": "Lognormal generative model",
    "fig7a": "Distribution of predicted reserve prices",
    "fig7b": "Real data: mean test revenue",
}


def _read_rows(csv_path):
    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _label(algo):
    return _LABELS.get(algo, algo)


def _render_curves(body, ax):
    series = {}
    for algo, size, mean, std in body:
        series.setdefault(algo, []).append((int(size), float(mean), float(std)))
    for algo in sorted(series):
        pts = sorted(series[algo])
        xs = [p[0] for p in pts]
        ax.errorbar(xs, [p[1] for p in pts], yerr=[p[2] for p in pts],
                    marker="o", capsize=3, label=_label(algo))
    ax.set_xscale("log", base=2)
    ax.set_xlabel("training sample size")
    ax.set_ylabel("normalized test revenue")
    ax.legend()


def _render_hist(body, ax):
    groups = {}
    for algo, r in body:
        groups.setdefault(algo, []).append(float(r))
    hi = max((max(v) for v in groups.values() if v), default=1.0)
    bins = [hi * i / 60.0 for i in range(61)]
    for algo in sorted(groups):
        ax.hist(groups[algo], bins=bins, density=True, histtype="step",
                linewidth=1.5, label=_label(algo))
    ax.set_xlabel("reserve price")
    ax.set_ylabel("density")
    ax.legend()


def _render_bars(body, ax):
    rows = [(algo, float(mean), float(std)) for algo, _, mean, std in body]
    ax.bar(range(len(rows)), [r[1] for r in rows], yerr=[r[2] for r in rows], capsize=4)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels([_label(r[0]) for r in rows])
    ax.set_ylabel("mean test revenue")


def render_figure(figure_id: str, csv_path, png_path) -> None:
    """Draw the figure for an emitted table and save it as PNG."""
    header, body = _read_rows(csv_path)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    try:
        if figure_id.startswith("fig6"):
            _render_curves(body, ax)
        elif figure_id == "fig7a":
            _render_hist(body, ax)
        elif figure_id == "fig7b":
            _render_bars(body, ax)
        else:
            raise ConfigError(f"unknown figure id {figure_id!r}")
        ax.set_title(_TITLES.get(figure_id, figure_id))
        fig.tight_layout()
        fig.savefig(png_path, dpi=150)
    finally:
        plt.close(fig)
