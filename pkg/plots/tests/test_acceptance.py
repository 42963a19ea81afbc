"""Secondary acceptance: render a real five-variant run's exports.

Drives the primary pipeline through its CLI (the external interface),
then checks that every figure's data series equal the CSV contents row
for row.
"""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from plots import plot_cdf, plot_chart, plot_spatial
from plots.cli import main

VARIANTS = ["V1", "V2", "V3", "V4", "V5"]


@pytest.fixture(scope="module")
def five_variant_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    config = {
        "scene": {
            "bs_positions": [[20.0, 2.0, 8.0], [55.0, 18.0, 8.0]],
            "obstacles": [{"axis": "y", "coord": 14.0, "lo": 42.0, "hi": 50.0,
                           "z_lo": 5.6, "z_hi": 6.5}],
            "user_region": [25.0, 55.0, 6.0, 12.0],
            "num_users": 200,
            "rng_seed": 7,
        },
        "nn": {"features": 60, "epochs": 2, "batch_size": 50},
    }
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(config))
    for variant in VARIANTS:
        proc = subprocess.run(
            [sys.executable, "-m", "chartbeam.cli", "run", "--variant", variant,
             "--config", str(cfg_path), "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
    return [out / v / "report" for v in VARIANTS]


def read_rows(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        next(reader)
        return np.array([[float(v) for v in row] for row in reader])


def test_cdf_figure_matches_run_exports(five_variant_run):
    fig = plot_cdf(five_variant_run)
    lines = fig.axes[0].lines
    assert [l.get_label() for l in lines] == VARIANTS
    for line, report_dir in zip(lines, five_variant_run):
        data = read_rows(report_dir / f"cdf_{line.get_label()}.csv")
        np.testing.assert_array_equal(line.get_xdata(), data[:, 0])
        np.testing.assert_array_equal(line.get_ydata(), data[:, 1])


def test_spatial_figure_matches_run_exports(five_variant_run):
    report = five_variant_run[4]
    fig = plot_spatial(report)
    ax = fig.axes[0]
    data = read_rows(report / "spatial_V5.csv")
    np.testing.assert_array_equal(np.asarray(ax.collections[0].get_offsets()),
                                  data[:, :2])
    np.testing.assert_array_equal(ax.collections[0].get_array(), data[:, 2])
    crosses = [l for l in ax.lines if l.get_marker() == "x"]
    assert len(crosses) == 2


def test_chart_figure_matches_run_exports(five_variant_run):
    report = five_variant_run[4]
    fig = plot_chart(report)
    data = read_rows(report / "chart_V5.csv")
    left, right = fig.axes[0], fig.axes[1]
    np.testing.assert_array_equal(np.asarray(left.collections[0].get_offsets()),
                                  data[:, :2])
    np.testing.assert_array_equal(np.asarray(right.collections[0].get_offsets()),
                                  data[:, 2:4])


def test_cli_emits_all_three_figures(five_variant_run, tmp_path):
    cdf_png = tmp_path / "cdf.png"
    assert main(["cdf", "--in"] + [str(d) for d in five_variant_run]
                + ["--out", str(cdf_png)]) == 0
    spatial_png = tmp_path / "spatial.png"
    assert main(["spatial", "--in", str(five_variant_run[4]),
                 "--out", str(spatial_png)]) == 0
    chart_png = tmp_path / "chart.png"
    assert main(["chart", "--in", str(five_variant_run[4]),
                 "--out", str(chart_png)]) == 0
    for png in (cdf_png, spatial_png, chart_png):
        assert png.stat().st_size > 0
