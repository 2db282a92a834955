"""Batch renderer: `quenchlab-report render --in DIR --out DIR [--style FILE]`.

Exit codes: 0 success, 2 for schema drift, missing data, or bad arguments.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .figures import render_figures
from .schemas import NoDataError, SchemaError, discover
from .summary import summarize

EXIT_INPUT = 2


def apply_style(path: str | None) -> None:
    """Update matplotlib rcParams from a flat JSON object."""
    if path is None:
        return
    try:
        with open(path) as fh:
            style = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"style file error: {exc}") from None
    if not isinstance(style, dict):
        raise SchemaError("style file must hold a JSON object")
    for key, value in style.items():
        if key not in plt.rcParams:
            raise SchemaError(f"unknown style key {key!r}")
        plt.rcParams[key] = value


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="quenchlab-report",
        description="render figures and a summary from experiment outputs",
    )
    sub = parser.add_subparsers(dest="action", required=True)
    render = sub.add_parser("render")
    render.add_argument("--in", dest="in_dir", required=True)
    render.add_argument("--out", dest="out_dir", required=True)
    render.add_argument("--style", default=None, help="JSON rcParams file")
    args = parser.parse_args(argv)
    try:
        apply_style(args.style)
        bundles = discover(args.in_dir)
        os.makedirs(args.out_dir, exist_ok=True)
        figures = render_figures(bundles, args.out_dir)
        with open(os.path.join(args.out_dir, "summary.md"), "w") as fh:
            fh.write(summarize(bundles))
    except (SchemaError, NoDataError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for path in figures + [os.path.join(args.out_dir, "summary.md")]:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
