import json

import numpy as np
import pytest


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format(v, ".17g") for v in row))
    path.write_text("\n".join(lines) + "\n")


def fabricate_report(report_dir, variant, n=40, with_chart=True, seed=0):
    """Write a report directory conforming to the pipeline export schemas."""
    rng = np.random.default_rng(seed)
    report_dir.mkdir(parents=True, exist_ok=True)
    eta = np.sort(rng.uniform(0, 1, n))
    cdf = np.arange(1, n + 1) / n
    write_csv(report_dir / f"cdf_{variant}.csv", ["eta", "cdf"],
              np.column_stack([eta, cdf]))
    x = rng.uniform(10, 110, n)
    y = rng.uniform(4, 13, n)
    los = rng.integers(0, 2, (n, 2)).astype(float)
    write_csv(report_dir / f"spatial_{variant}.csv",
              ["x", "y", "eta", "los_bs1", "los_bs2"],
              np.column_stack([x, y, rng.permutation(eta), los]))
    if with_chart:
        write_csv(report_dir / f"chart_{variant}.csv", ["x", "y", "z1", "z2"],
                  np.column_stack([x, y, rng.normal(size=n), rng.normal(size=n)]))
    summary = {
        "variant": variant,
        "num_evaluated": n,
        "eta_median": float(np.median(eta)),
        "overhead": {"floats_per_user": 5, "raw_floats_per_user": 2048,
                     "ratio": 5 / 2048},
        "meta": {"bs_positions": [[20.0, 2.0, 8.0], [100.0, 18.0, 8.0]]},
    }
    (report_dir / "summary.json").write_text(json.dumps(summary, indent=2))
    return report_dir


@pytest.fixture
def five_reports(tmp_path):
    return [
        fabricate_report(tmp_path / v / "report", v, seed=i,
                         with_chart=(v != "V1"))
        for i, v in enumerate(["V1", "V2", "V3", "V4", "V5"])
    ]
