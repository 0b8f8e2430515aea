"""``cutstokes3f run <config-file>`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from cutstokes3f.geometry import AssumptionViolation, CoverageError, write_svg
from cutstokes3f.harness.config import ConfigError, read_config
from cutstokes3f.harness.experiments import run_experiment
from cutstokes3f.solver import SingularSystemError, SizeLimitError

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def export_matrix(system, path) -> None:
    """Coordinate text export: one ``row col value`` line per stored entry."""
    K = system.K.tocoo()
    order = np.lexsort((K.col, K.row))
    with open(path, "w", encoding="utf-8") as fh:
        for r, c, v in zip(K.row[order], K.col[order], K.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cutstokes3f", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config", help="key = value experiment file")
    run.add_argument("--out", help="CSV output path (default: output.path, else stdout)")
    run.add_argument("--export-matrix", metavar="PATH", help="write the last assembled matrix as row col value lines")
    run.add_argument("--svg", metavar="PATH", help="write the last cut configuration as SVG")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = read_config(args.config)
        result = run_experiment(config)
    except (ConfigError, CoverageError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularSystemError, SizeLimitError, AssumptionViolation, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    csv = result.to_csv()
    out = args.out or config.output
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(csv)
    else:
        sys.stdout.write(csv)
    if args.export_matrix:
        export_matrix(result.systems[-1], args.export_matrix)
    if args.svg:
        write_svg(result.cut_sets[-1], args.svg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
