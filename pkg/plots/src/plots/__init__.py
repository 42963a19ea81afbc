"""Figure rendering for chartbeam experiment exports."""

from .figures import plot_cdf, plot_chart, plot_spatial
from .io import ExportError

__version__ = "0.1.0"
