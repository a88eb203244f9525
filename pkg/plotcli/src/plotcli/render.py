"""Read aggregate regret CSVs and render mean curves with std bands.

The input format is the experiment harness's aggregate CSV: optional
``#``-prefixed comment lines, then the exact header
``t,mean_cum_pseudo,std_cum_pseudo,mean_cum_realized,std_cum_realized``.
This tool only draws what the files contain; it never recomputes
statistics.
"""

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

AGGREGATE_COLUMNS = ("t", "mean_cum_pseudo", "std_cum_pseudo",
                     "mean_cum_realized", "std_cum_realized")
COLUMN_CHOICES = ("cum_pseudo", "cum_realized")


class PlotInputError(ValueError):
    """Malformed or inconsistent input files."""


@dataclass(frozen=True)
class PlotJob:
    """One figure: labeled aggregate inputs, the regret column, and styling."""

    inputs: tuple
    column: str = "cum_pseudo"
    output_path: str = "regret.png"
    title: str = ""

    def __post_init__(self):
        if not self.inputs:
            raise PlotInputError("at least one input file is required")
        if self.column not in COLUMN_CHOICES:
            raise PlotInputError(
                f"column must be one of {COLUMN_CHOICES}, got {self.column!r}")
        object.__setattr__(self, "inputs", tuple(tuple(p) for p in self.inputs))


@dataclass(frozen=True)
class AggregateSeries:
    label: str
    t: np.ndarray
    mean: np.ndarray
    std: np.ndarray


def read_aggregate(path, column):
    """Parse one aggregate CSV into the selected (t, mean, std) series."""
    header = None
    rows = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PlotInputError(f"{path}: cannot read input ({exc})") from exc
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if header is None:
            header = fields
            if tuple(header) != AGGREGATE_COLUMNS:
                raise PlotInputError(
                    f"{path}: expected columns "
                    f"{','.join(AGGREGATE_COLUMNS)}, found {','.join(header)}")
            continue
        if len(fields) != len(AGGREGATE_COLUMNS):
            raise PlotInputError(
                f"{path}: row with {len(fields)} fields, expected "
                f"{len(AGGREGATE_COLUMNS)}")
        rows.append([float(v) for v in fields])
    if header is None or not rows:
        raise PlotInputError(f"{path}: no data rows")
    data = np.asarray(rows)
    cols = dict(zip(AGGREGATE_COLUMNS, data.T))
    return cols["t"], cols[f"mean_{column}"], cols[f"std_{column}"]


def load_job_series(job):
    """Load every input of a job, enforcing a shared time axis."""
    series = []
    for path, label in job.inputs:
        t, mean, std = read_aggregate(path, job.column)
        series.append(AggregateSeries(label=label, t=t, mean=mean, std=std))
    first_path = job.inputs[0][0]
    for (path, _), entry in zip(job.inputs[1:], series[1:]):
        if not np.array_equal(series[0].t, entry.t):
            raise PlotInputError(
                f"time axes differ between {first_path} and {path}")
    return series


def render(job):
    """Draw the figure described by ``job`` and write it to its output path.

    One mean curve per input with a shaded mean +/- std band; inputs are
    drawn in the order given so legend order matches the command line.
    """
    series = load_job_series(job)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for entry in series:
        (line,) = ax.plot(entry.t, entry.mean, label=entry.label, linewidth=1.8)
        ax.fill_between(entry.t, entry.mean - entry.std,
                        entry.mean + entry.std, alpha=0.25,
                        color=line.get_color(), linewidth=0)
    ax.set_xlabel("t")
    ax.set_ylabel("cumulative regret")
    if job.title:
        ax.set_title(job.title)
    ax.legend(loc="upper left")
    ax.margins(x=0)
    fig.tight_layout()
    # strip mutable metadata so identical inputs give identical bytes
    fig.savefig(job.output_path, dpi=150, metadata=_clean_metadata(job))
    plt.close(fig)
    return job.output_path


def _clean_metadata(job):
    suffix = Path(job.output_path).suffix.lower()
    if suffix == ".png":
        return {"Software": "plotcli"}
    if suffix == ".svg":
        return {"Date": None}
    return None
