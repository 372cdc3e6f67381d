"""Deterministic SVG figure emission.

All figures are rendered with matplotlib to SVG files that are byte-stable
across runs: the SVG hash salt is pinned, the creation date is stripped,
text stays text (no font paths), and viewports are fixed. Heat overlays
use a two-colour linear ramp from dark blue (minimum) to warm yellow
(maximum), with the endpoints annotated in the legend.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle, Patch
from scipy.stats import rankdata

_RC = {
    "svg.hashsalt": "blime",
    "svg.fonttype": "none",
    "figure.dpi": 100,
    "font.family": "sans-serif",
    "font.size": 9,
    "axes.titlesize": 10,
}

RAMP_LOW = np.array([0.09, 0.12, 0.44])
RAMP_HIGH = np.array([0.99, 0.87, 0.21])
_OVERLAY_ALPHA = 0.65


def _save(fig, path: str) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _ramp(values: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Map values linearly onto the two-colour ramp; returns (rgb, lo, hi)."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = float(values.min()), float(values.max())
    unit = np.zeros_like(values) if hi == lo else (values - lo) / (hi - lo)
    return RAMP_LOW + unit[..., None] * (RAMP_HIGH - RAMP_LOW), lo, hi


def _show_image(ax, image: np.ndarray) -> None:
    if image.shape[2] == 1:
        ax.imshow(image[:, :, 0], cmap="gray", vmin=0, vmax=255, interpolation="nearest")
    else:
        ax.imshow(image, interpolation="nearest")
    ax.set_xticks(())
    ax.set_yticks(())


def _boundaries(labels: np.ndarray) -> np.ndarray:
    edge = np.zeros(labels.shape, dtype=bool)
    edge[1:, :] |= labels[1:, :] != labels[:-1, :]
    edge[:, 1:] |= labels[:, 1:] != labels[:, :-1]
    return edge


def _centroids(labels: np.ndarray, m: int) -> np.ndarray:
    ys, xs = np.indices(labels.shape)
    out = np.empty((m, 2))
    for j in range(m):
        sel = labels == j
        out[j] = (xs[sel].mean(), ys[sel].mean())
    return out


def _component_overlay(ax, labels: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    colours, lo, hi = _ramp(values)
    rgba = np.empty((*labels.shape, 4))
    rgba[..., :3] = colours[labels]
    rgba[..., 3] = _OVERLAY_ALPHA
    edge = _boundaries(labels)
    rgba[edge] = (0.0, 0.0, 0.0, 0.9)
    ax.imshow(rgba, interpolation="nearest")
    return lo, hi


def _legend_minmax(ax, lo: float, hi: float, label: str) -> None:
    handles = [
        Patch(facecolor=RAMP_LOW, label=f"min {label} = {lo:.4g}"),
        Patch(facecolor=RAMP_HIGH, label=f"max {label} = {hi:.4g}"),
    ]
    ax.legend(
        handles=handles,
        loc="upper center",
        bbox_to_anchor=(0.5, -0.04),
        frameon=False,
        ncol=2,
        fontsize=8,
    )


def rank_overlay(
    image: np.ndarray, labels: np.ndarray, mean_ranks: np.ndarray, path: str
) -> None:
    """Absolute ranking figure: integer rank per superpixel, M = most important."""
    absolute = rankdata(mean_ranks, method="ordinal")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4, 4))
        _show_image(ax, image)
        edge = _boundaries(labels)
        rgba = np.zeros((*labels.shape, 4))
        rgba[edge] = (0.0, 0.0, 0.0, 0.9)
        ax.imshow(rgba, interpolation="nearest")
        radius = 0.06 * max(labels.shape)
        for j, (x, y) in enumerate(_centroids(labels, len(mean_ranks))):
            # Disc behind the numeral keeps the label readable while the
            # glyph itself stays an SVG text element.
            ax.add_patch(Circle((x, y), radius, facecolor="black", alpha=0.55))
            ax.text(
                x,
                y,
                str(int(absolute[j])),
                color="white",
                ha="center",
                va="center",
                fontsize=13,
            )
        ax.set_title("absolute ranking (M = most important)")
        fig.tight_layout()
        _save(fig, path)


def heat_overlay(
    image: np.ndarray,
    labels: np.ndarray,
    values: np.ndarray,
    label: str,
    path: str,
) -> None:
    """Per-superpixel heat overlay of ``values`` on the original image."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4, 4.4))
        _show_image(ax, image)
        lo, hi = _component_overlay(ax, labels, np.asarray(values))
        _legend_minmax(ax, lo, hi, label)
        ax.set_title(label)
        fig.tight_layout()
        _save(fig, path)


def token_table(
    tokens,
    mean_ranks: np.ndarray,
    consensus: np.ndarray,
    kendall_w: float,
    fleiss_kappa: float,
    path: str,
) -> None:
    """Per-token table of mean rank and consensus, most important first."""
    order = np.argsort(-np.asarray(mean_ranks), kind="stable")
    rows = [
        [str(j), tokens[j], f"{mean_ranks[j]:.3f}", f"{consensus[j]:.3f}"]
        for j in order
    ]
    with plt.rc_context(_RC):
        height = 0.9 + 0.28 * len(rows)
        fig, ax = plt.subplots(figsize=(5, height))
        ax.axis("off")
        table = ax.table(
            cellText=rows,
            colLabels=["component", "token", "mean rank", "consensus C"],
            loc="center",
            cellLoc="center",
        )
        table.scale(1.0, 1.3)
        ax.set_title(
            f"token importance (W = {kendall_w:.4f}, kappa = {fleiss_kappa:.4f})"
        )
        fig.tight_layout()
        _save(fig, path)


def sweep_lines(
    values,
    mean_rank_curves: np.ndarray,
    consensus_curves: np.ndarray,
    path: str,
    xlabel: str = "parameter value",
) -> None:
    """Per-component mean rank (top) and consensus (bottom) line charts.

    ``mean_rank_curves`` and ``consensus_curves`` hold one row per swept
    value and one column per component, already aggregated over replicates.
    """
    values = list(values)
    m = mean_rank_curves.shape[1]
    with plt.rc_context(_RC):
        fig, (ax_rank, ax_cons) = plt.subplots(
            2, 1, sharex=True, figsize=(5.5, 6)
        )
        for j in range(m):
            ax_rank.plot(values, mean_rank_curves[:, j], marker="o", label=f"c{j}")
            ax_cons.plot(values, consensus_curves[:, j], marker="o", label=f"c{j}")
        ax_rank.set_ylabel("mean rank")
        ax_cons.set_ylabel("consensus C")
        ax_cons.set_ylim(-0.02, 1.02)
        ax_cons.set_xlabel(xlabel)
        ax_rank.legend(ncol=min(m, 4), fontsize=7, frameon=False)
        fig.tight_layout()
        _save(fig, path)


def violins(samples: np.ndarray, path: str, ylabel: str = "coefficient") -> None:
    """Histogram-silhouette violins, one per component (no smoothing).

    Each silhouette mirrors the per-component histogram of ``samples``
    (rows = draws, columns = components) around the component's x position.
    """
    samples = np.asarray(samples, dtype=np.float64)
    k, m = samples.shape
    bins = max(8, min(24, k // 6))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.75 * m), 4))
        for j in range(m):
            col = samples[:, j]
            lo, hi = float(col.min()), float(col.max())
            if hi == lo:
                ax.plot([j - 0.3, j + 0.3], [lo, lo], color="tab:blue", lw=2)
                continue
            counts, edges = np.histogram(col, bins=bins, range=(lo, hi))
            half = 0.4 * counts / counts.max()
            centres = (edges[:-1] + edges[1:]) / 2
            ax.fill_betweenx(
                centres, j - half, j + half, step="mid", color="tab:blue", alpha=0.75
            )
            ax.plot(
                [j - 0.2, j + 0.2], [np.median(col)] * 2, color="black", lw=1.2
            )
        ax.set_xticks(range(m))
        ax.set_xticklabels([f"c{j}" for j in range(m)])
        ax.set_ylabel(ylabel)
        fig.tight_layout()
        _save(fig, path)
