"""Strict readers for the experiment export formats.

The plotting tool owns no models or datasets; everything it draws comes
from these CSV/JSON files. Schemas are enforced exactly: a missing file,
an empty table or an unexpected column is an error naming the file.
"""

import csv
import json
from pathlib import Path

import numpy as np

CDF_COLUMNS = ["eta", "cdf"]
SPATIAL_COLUMNS = ["x", "y", "eta", "los_bs1", "los_bs2"]
CHART_COLUMNS = ["x", "y", "z1", "z2"]


class ExportError(Exception):
    """A report file is missing, empty, or malformed."""


def read_table(path, columns):
    """Read a CSV with exactly the given columns into a dict of arrays."""
    path = Path(path)
    if not path.exists():
        raise ExportError(f"missing report file: {path}")
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ExportError(f"empty report file: {path}") from None
        if header != columns:
            unknown = [c for c in header if c not in columns]
            if unknown:
                raise ExportError(f"{path}: unknown columns {unknown}")
            raise ExportError(f"{path}: expected columns {columns}, got {header}")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ExportError(f"no data rows in {path}")
    data = np.asarray(rows)
    return {name: data[:, i] for i, name in enumerate(columns)}


def find_variant_file(report_dir, prefix):
    """Locate the single `<prefix>_<variant>.csv` in a report directory."""
    report_dir = Path(report_dir)
    matches = sorted(report_dir.glob(f"{prefix}_*.csv"))
    if not matches:
        raise ExportError(f"no {prefix}_<variant>.csv in {report_dir}")
    if len(matches) > 1:
        raise ExportError(f"ambiguous {prefix} files in {report_dir}: "
                          f"{[m.name for m in matches]}")
    return matches[0]


def variant_of(path):
    stem = Path(path).stem
    return stem.split("_", 1)[1]


def read_summary(report_dir):
    path = Path(report_dir) / "summary.json"
    if not path.exists():
        raise ExportError(f"missing report file: {path}")
    with open(path) as f:
        return json.load(f)
