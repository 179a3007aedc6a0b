"""Figure rendering for the report path.

Every CSV the CLI writes for a curve has a PNG sibling produced here.
Rendering is headless (Agg) and deliberately plain: solid fitted line,
dash-dotted band limits, square markers for binned data.
"""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

_BAND_KW = dict(linestyle="-.", linewidth=1.0)


def save_curve_figure(
    path: str,
    x: np.ndarray,
    y: np.ndarray,
    ci_low: Optional[np.ndarray] = None,
    ci_high: Optional[np.ndarray] = None,
    points: Optional[Sequence[tuple[float, float, float]]] = None,
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
    hline: Optional[float] = None,
) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(x, y, color="tab:blue", linewidth=1.6, label="model")
    if ci_low is not None and ci_high is not None:
        ax.plot(x, ci_high, color="tab:red", label="95% CI upper", **_BAND_KW)
        ax.plot(x, ci_low, color="tab:green", label="95% CI lower", **_BAND_KW)
    if points:
        px = [p[0] for p in points]
        py = [p[1] for p in points]
        pe = [p[2] for p in points]
        ax.errorbar(px, py, yerr=pe, fmt="ks", markersize=4,
                    capsize=2, linewidth=1.0, label="data")
    if hline is not None:
        ax.axhline(hline, color="black", linestyle=":", linewidth=1.0)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_step_figure(
    path: str,
    edges: Sequence[float],
    values: Sequence[float],
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
    ci: Optional[tuple[Sequence[float], Sequence[float]]] = None,
) -> None:
    """Histogram-style step plot over bin edges (len(values) = len(edges)-1)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    xs = np.asarray(edges, dtype=float)
    vs = np.asarray(list(values) + [values[-1]], dtype=float)
    ax.step(xs, vs, where="post", color="tab:blue", linewidth=1.6)
    if ci is not None:
        lo = np.asarray(list(ci[0]) + [ci[0][-1]], dtype=float)
        hi = np.asarray(list(ci[1]) + [ci[1][-1]], dtype=float)
        ax.step(xs, hi, where="post", color="tab:red", **_BAND_KW)
        ax.step(xs, lo, where="post", color="tab:green", **_BAND_KW)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def clock_axis_hours(ax) -> None:
    ax.set_xticks(range(0, 25, 4))
    ax.set_xlim(0, 24)
