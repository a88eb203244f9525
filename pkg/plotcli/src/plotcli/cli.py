"""Command line for rendering regret curves from aggregate CSV files.

Exit codes: 0 on success, 1 on bad flags, 2 on unreadable or inconsistent
input files.
"""

import argparse
import sys
from pathlib import Path

from .render import COLUMN_CHOICES, PlotInputError, PlotJob, render


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def parse_input(text):
    """Split ``path:label`` on the rightmost colon; a bare path labels
    itself by its stem."""
    path, sep, label = text.rpartition(":")
    if not sep:
        return text, Path(text).stem
    if not path:
        raise UsageError(f"malformed --input {text!r}; expected path:label")
    return path, label or Path(path).stem


def build_parser():
    parser = _Parser(
        prog="plotcli",
        description="Plot mean cumulative regret with standard-deviation "
                    "bands from aggregate CSV files.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--input", action="append", required=True,
                        metavar="PATH[:LABEL]",
                        help="aggregate CSV with an optional legend label; "
                             "repeat for multiple curves")
    parser.add_argument("--column", choices=COLUMN_CHOICES,
                        default="cum_pseudo",
                        help="which cumulative-regret column to draw")
    parser.add_argument("--out", required=True, metavar="IMAGE",
                        help="output image path (extension picks the format)")
    parser.add_argument("--title", default="", help="figure title")
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        inputs = tuple(parse_input(item) for item in args.input)
    except UsageError as exc:
        print(f"plotcli: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        job = PlotJob(inputs=inputs, column=args.column, output_path=args.out,
                      title=args.title)
        render(job)
    except PlotInputError as exc:
        print(f"plotcli: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"plotcli: error: {exc}", file=sys.stderr)
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
