import csv

import numpy as np
import pytest

from plots import ExportError, plot_cdf, plot_chart, plot_spatial
from plots.cli import main
from plots.io import read_table
from conftest import fabricate_report, write_csv


def read_rows(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    return header, data


# ---------------------------------------------------------------------------
# CDF figure
# ---------------------------------------------------------------------------

def test_cdf_five_curves_match_csvs(five_reports):
    fig = plot_cdf(five_reports)
    ax = fig.axes[0]
    assert len(ax.lines) == 5
    labels = [line.get_label() for line in ax.lines]
    assert labels == ["V1", "V2", "V3", "V4", "V5"]
    for line, report_dir in zip(ax.lines, five_reports):
        variant = line.get_label()
        _, data = read_rows(report_dir / f"cdf_{variant}.csv")
        np.testing.assert_array_equal(line.get_xdata(), data[:, 0])
        np.testing.assert_array_equal(line.get_ydata(), data[:, 1])
    assert ax.get_xlim() == (0.0, 1.0)


def test_cdf_point_mass_at_one(tmp_path):
    report = tmp_path / "report"
    report.mkdir()
    write_csv(report / "cdf_V1.csv", ["eta", "cdf"],
              [[1.0, 0.5], [1.0, 1.0]])
    fig = plot_cdf([report])
    line = fig.axes[0].lines[0]
    assert np.all(line.get_xdata() == 1.0)


def test_cdf_missing_file_raises(tmp_path):
    with pytest.raises(ExportError, match="cdf"):
        plot_cdf([tmp_path])


def test_cdf_custom_color(five_reports):
    fig = plot_cdf(five_reports, colors={"V2": "#123456"})
    line = [l for l in fig.axes[0].lines if l.get_label() == "V2"][0]
    assert line.get_color() == "#123456"


# ---------------------------------------------------------------------------
# spatial figure
# ---------------------------------------------------------------------------

def test_spatial_points_match_csv(five_reports):
    report = five_reports[4]
    fig = plot_spatial(report)
    ax = fig.axes[0]
    offsets = ax.collections[0].get_offsets()
    _, data = read_rows(report / "spatial_V5.csv")
    np.testing.assert_array_equal(np.asarray(offsets), data[:, :2])
    np.testing.assert_array_equal(ax.collections[0].get_array(), data[:, 2])
    assert ax.collections[0].get_clim() == (0.0, 1.0)


def test_spatial_draws_two_bs_crosses(five_reports):
    fig = plot_spatial(five_reports[0])
    ax = fig.axes[0]
    crosses = [l for l in ax.lines if l.get_marker() == "x"]
    assert len(crosses) == 2
    assert crosses[0].get_xdata()[0] == 20.0
    assert crosses[1].get_xdata()[0] == 100.0


def test_spatial_uniform_eta_uniform_color(tmp_path):
    report = tmp_path / "report"
    report.mkdir()
    rows = [[float(i), 5.0, 0.5, 1.0, 0.0] for i in range(10)]
    write_csv(report / "spatial_V2.csv",
              ["x", "y", "eta", "los_bs1", "los_bs2"], rows)
    (report / "summary.json").write_text("{}")
    fig = plot_spatial(report)
    values = fig.axes[0].collections[0].get_array()
    assert np.all(values == 0.5)


# ---------------------------------------------------------------------------
# chart figure
# ---------------------------------------------------------------------------

def test_chart_panels_match_csv(five_reports):
    report = five_reports[4]
    fig = plot_chart(report)
    left, right = fig.axes[0], fig.axes[1]
    _, data = read_rows(report / "chart_V5.csv")
    np.testing.assert_array_equal(np.asarray(left.collections[0].get_offsets()),
                                  data[:, :2])
    np.testing.assert_array_equal(np.asarray(right.collections[0].get_offsets()),
                                  data[:, 2:4])


def test_chart_same_hue_both_panels(five_reports):
    fig = plot_chart(five_reports[1])
    left, right = fig.axes[0], fig.axes[1]
    np.testing.assert_array_equal(left.collections[0].get_array(),
                                  right.collections[0].get_array())


def test_chart_identity_latents_identical_panels(tmp_path):
    report = tmp_path / "report"
    report.mkdir()
    rng = np.random.default_rng(1)
    x, y = rng.uniform(0, 10, 20), rng.uniform(0, 10, 20)
    write_csv(report / "chart_V2.csv", ["x", "y", "z1", "z2"],
              np.column_stack([x, y, x, y]))
    (report / "summary.json").write_text("{}")
    fig = plot_chart(report)
    left, right = fig.axes[0], fig.axes[1]
    np.testing.assert_array_equal(np.asarray(left.collections[0].get_offsets()),
                                  np.asarray(right.collections[0].get_offsets()))


def test_chart_notes_higher_dims(five_reports, capsys):
    plot_chart(five_reports[1])  # summary says floats_per_user = 5
    assert "first two" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# schema enforcement
# ---------------------------------------------------------------------------

def test_unknown_columns_rejected(tmp_path):
    path = tmp_path / "cdf_V1.csv"
    path.write_text("eta,cdf,bonus\n0.5,0.5,1\n")
    with pytest.raises(ExportError, match="unknown columns"):
        read_table(path, ["eta", "cdf"])


def test_empty_csv_names_file(tmp_path):
    path = tmp_path / "cdf_V1.csv"
    path.write_text("eta,cdf\n")
    with pytest.raises(ExportError, match="cdf_V1.csv"):
        read_table(path, ["eta", "cdf"])


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_renders_all_kinds(five_reports, tmp_path):
    out = tmp_path / "cdf.png"
    assert main(["cdf", "--in"] + [str(d) for d in five_reports]
                + ["--out", str(out)]) == 0
    assert out.exists()
    out2 = tmp_path / "spatial.png"
    assert main(["spatial", "--in", str(five_reports[4]),
                 "--out", str(out2)]) == 0
    assert out2.exists()
    out3 = tmp_path / "chart.png"
    assert main(["chart", "--in", str(five_reports[4]),
                 "--out", str(out3)]) == 0
    assert out3.exists()


def test_cli_missing_input_nonzero_exit(tmp_path, capsys):
    code = main(["spatial", "--in", str(tmp_path), "--out",
                 str(tmp_path / "x.png")])
    assert code != 0
    assert "spatial" in capsys.readouterr().err
