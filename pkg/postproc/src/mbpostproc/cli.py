"""Command line entry: render a figure from a result archive.

    postproc <archive> --figure sit|spectrum|populations [-o out.png]
"""

from __future__ import annotations

import argparse
import sys

from .archive import ArchiveError
from .figures import FIGURE_KINDS, make_figure

__all__ = ["main", "entry_point"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="postproc", description="figures and spectra from result archives"
    )
    parser.add_argument("archive", help="path to a result archive directory")
    parser.add_argument(
        "--figure", required=True, choices=FIGURE_KINDS, help="figure to render"
    )
    parser.add_argument("-o", "--output", help="output image path (.png/.svg)")
    parser.add_argument(
        "--result", default="e0", help="result name for the spectrum figure"
    )
    args = parser.parse_args(argv)
    try:
        written = make_figure(args.figure, args.archive, args.output, result=args.result)
    except (ArchiveError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(written)
    return 0


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
