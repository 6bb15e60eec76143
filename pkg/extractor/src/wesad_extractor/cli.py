"""CLI: wesad-extract --root <dir> --out merged.csv [--window --overlap --labels]."""

from __future__ import annotations

import argparse
import logging
import sys

from .archive import ExtractorError
from .extract import DEFAULT_OVERLAP, DEFAULT_WINDOW_SECONDS, extract


def parse_label_map(raw: str) -> dict[int, int]:
    """Parse 'raw:mapped' pairs, e.g. '1:0,2:1,3:2'."""
    mapping = {}
    for pair in raw.split(","):
        src, dst = pair.split(":")
        mapping[int(src)] = int(dst)
    return mapping


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wesad-extract",
        description="Convert WESAD per-subject pickle archives into one feature CSV.",
    )
    parser.add_argument("--root", required=True, help="dataset root with S2..S17 dirs")
    parser.add_argument("--out", required=True, help="merged CSV path")
    parser.add_argument("--window", type=float, default=DEFAULT_WINDOW_SECONDS,
                        help="window seconds; 0 emits one row per label segment")
    parser.add_argument("--overlap", type=float, default=DEFAULT_OVERLAP)
    parser.add_argument("--labels", default="1:0,2:1,3:2",
                        help="raw:mapped pairs, default baseline/stress/amusement")
    parser.add_argument("--eda-median-window", type=float, default=4.0)
    parser.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        stats = extract(
            args.root,
            args.out,
            window_s=args.window,
            overlap=args.overlap,
            label_map=parse_label_map(args.labels),
            eda_median_s=args.eda_median_window,
        )
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"bad arguments: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}: {stats.rows} rows from {stats.subjects} subjects")
    return 0


if __name__ == "__main__":
    sys.exit(main())
