"""Render mean-regret curves with standard-deviation shading from the
experiment harness's aggregate CSV files."""

__version__ = "0.1.0"

from .render import (AGGREGATE_COLUMNS, COLUMN_CHOICES, PlotInputError,
                     PlotJob, read_aggregate, render)

__all__ = ["__version__", "AGGREGATE_COLUMNS", "COLUMN_CHOICES",
           "PlotInputError", "PlotJob", "read_aggregate", "render"]
