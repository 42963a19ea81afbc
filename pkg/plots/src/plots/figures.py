"""Figure builders for the three standard views of an experiment run.

Each builder takes report directories, draws from the exported CSVs only,
and returns the matplotlib figure so callers (and tests) can inspect the
data series before saving.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import (
    CDF_COLUMNS,
    CHART_COLUMNS,
    SPATIAL_COLUMNS,
    find_variant_file,
    read_summary,
    read_table,
    variant_of,
)

DEFAULT_COLORS = {
    "V1": "tab:blue",
    "V2": "tab:orange",
    "V3": "tab:green",
    "V4": "tab:red",
    "V5": "tab:purple",
}


def plot_cdf(report_dirs, colors=None):
    """Overlayed empirical CDFs of the per-user correlations, one per variant."""
    colors = {**DEFAULT_COLORS, **(colors or {})}
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for report_dir in report_dirs:
        path = find_variant_file(report_dir, "cdf")
        table = read_table(path, CDF_COLUMNS)
        variant = variant_of(path)
        ax.step(table["eta"], table["cdf"], where="post", label=variant,
                color=colors.get(variant))
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel(r"correlation $\eta$")
    ax.set_ylabel("empirical CDF")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return fig


def plot_spatial(report_dir):
    """Test users at their positions colored by correlation, BSs as crosses."""
    path = find_variant_file(report_dir, "spatial")
    table = read_table(path, SPATIAL_COLUMNS)
    variant = variant_of(path)
    fig, ax = plt.subplots(figsize=(8, 4))
    scatter = ax.scatter(table["x"], table["y"], c=table["eta"], s=12,
                         cmap="viridis", vmin=0.0, vmax=1.0)
    fig.colorbar(scatter, ax=ax, label=r"$\eta$")
    summary = read_summary(report_dir)
    bs_positions = summary.get("meta", {}).get("bs_positions")
    if bs_positions:
        markers = ["bx", "rx"]
        for (pos, marker) in zip(bs_positions, markers):
            ax.plot(pos[0], pos[1], marker, markersize=12, markeredgewidth=3)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"spatial correlation map ({variant})")
    fig.tight_layout()
    return fig


def location_hue(x, y):
    """Hue shared by both chart panels so neighborhoods are comparable."""
    span_x = np.ptp(x) or 1.0
    span_y = np.ptp(y) or 1.0
    return (x - x.min()) / span_x + (y - y.min()) / span_y


def plot_chart(report_dir):
    """True locations next to the first two chart dimensions, same hue."""
    path = find_variant_file(report_dir, "chart")
    table = read_table(path, CHART_COLUMNS)
    variant = variant_of(path)
    summary = read_summary(report_dir)
    dim = summary.get("overhead", {}).get("floats_per_user")
    if dim and dim > 2:
        print(f"note: chart has {dim} dimensions; plotting the first two")
    hue = location_hue(table["x"], table["y"])
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    left.scatter(table["x"], table["y"], c=hue, s=12, cmap="hsv")
    left.set_title("user locations")
    left.set_xlabel("x [m]")
    left.set_ylabel("y [m]")
    right.scatter(table["z1"], table["z2"], c=hue, s=12, cmap="hsv")
    right.set_title(f"learned chart ({variant})")
    right.set_xlabel("z1")
    right.set_ylabel("z2")
    fig.tight_layout()
    return fig
