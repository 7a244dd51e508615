"""SVG charts for the diagnose and report stages.

Figures are rendered with the Agg backend and a fixed SVG hash salt and
no date stamp, so the same inputs give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .diagnostics import BalanceReport, OverlapHistogram  # noqa: E402

STYLE = {
    "svg.hashsalt": "pitchipw",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
INSIDE_COLOR = "#c0392b"
OUTSIDE_COLOR = "#2c6fbb"


def _save(fig, path: str | Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)


def plot_overlap(hist: OverlapHistogram, path: str | Path) -> None:
    """Propensity densities per group, raw (left) and IPW-weighted (right)."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(8, 3.2), sharey=True)
        edges = hist.bin_edges
        panels = ((hist.density_treated, hist.density_control, "unweighted"),
                  (hist.weighted_density_treated, hist.weighted_density_control, "IPW-weighted"))
        for ax, (d1, d0, title) in zip(axes, panels):
            ax.stairs(d1, edges, fill=True, alpha=0.45, color=INSIDE_COLOR, label="inside")
            ax.stairs(d0, edges, fill=True, alpha=0.45, color=OUTSIDE_COLOR, label="outside")
            ax.set_title(title)
            ax.set_xlabel("propensity score")
            ax.set_xlim(0, 1)
        axes[0].set_ylabel("density")
        axes[0].legend(frameon=False)
        _save(fig, path)


def plot_balance(report: BalanceReport, path: str | Path) -> None:
    """Dot chart of ASAM before and after weighting with the threshold line."""
    rows = [r for r in report.rows if not r.degenerate]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 0.28 * len(rows) + 1.2))
        ypos = np.arange(len(rows))[::-1]
        ax.scatter([r.asam_before for r in rows], ypos, color=INSIDE_COLOR, label="before", zorder=3)
        ax.scatter([r.asam_after for r in rows], ypos, color=OUTSIDE_COLOR, label="after", zorder=3)
        for r, yp in zip(rows, ypos):
            if not r.passed:
                ax.annotate(f"{r.asam_after:.3f}", (r.asam_after, yp), textcoords="offset points",
                            xytext=(5, -3), color=OUTSIDE_COLOR)
        ax.axvline(report.threshold, color="0.4", linestyle="--", linewidth=1)
        ax.set_yticks(ypos, [r.name for r in rows])
        ax.set_xlabel("ASAM")
        ax.legend(frameon=False, loc="lower right")
        _save(fig, path)


def plot_importance(features: list[str], values: list[float], path: str | Path) -> None:
    """Horizontal bars of permutation importance, largest on top."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 0.28 * len(features) + 1.2))
        ypos = np.arange(len(features))[::-1]
        ax.barh(ypos, values, color="0.45")
        ax.set_yticks(ypos, features)
        ax.set_xlabel("increase in log-loss when permuted")
        _save(fig, path)


def plot_strata(labels: list[str], taus: list[float], lows: list[float], highs: list[float],
                path: str | Path, footnote: str = "", ylabel: str = "effect (runs per pitch)") -> None:
    """Point estimates with interval whiskers per stratum."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(3.5, 1.1 * len(labels) + 1.5), 3.2))
        x = np.arange(len(labels))
        taus_a = np.asarray(taus, dtype=float)
        err = np.vstack([taus_a - np.asarray(lows, dtype=float), np.asarray(highs, dtype=float) - taus_a])
        ax.errorbar(x, taus_a, yerr=err, fmt="o", color="black", capsize=4)
        ax.axhline(0.0, color="0.6", linewidth=0.8)
        ax.set_xticks(x, labels)
        ax.set_ylabel(ylabel)
        if footnote:
            fig.text(0.01, -0.02, footnote, fontsize=7, ha="left", va="top")
        _save(fig, path)
