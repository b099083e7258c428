"""Command-line entry point: `gdf2eegt convert`."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .convert import ConversionError, ConversionSpec, convert
from .gdf import GdfError


def parse_subjects(text):
    """'1..9', '3', or '1,4,7' -> tuple of subject ids."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            lo, hi = int(lo), int(hi)
        except ValueError:
            raise ValueError(f"cannot parse subject range {text!r}")
        if lo > hi:
            raise ValueError(f"empty subject range {text!r}")
        return tuple(range(lo, hi + 1))
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ValueError(f"cannot parse subjects {text!r}")


def parse_window(text):
    """'0.5:4.0' -> (start_s, length_s)."""
    try:
        start, _, length = text.partition(":")
        return float(start), float(length)
    except ValueError:
        raise ValueError(f"cannot parse window {text!r} (want start:length)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gdf2eegt",
        description="Convert GDF 2.x motor-imagery sessions into an EEGT container")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("convert", help="extract cue-aligned trials and write a container")
    p.add_argument("--in", dest="input_dir", required=True,
                   help="directory holding A0<s>T/A0<s>E .gdf and .mat files")
    p.add_argument("--out", required=True, help="output container path")
    p.add_argument("--subjects", default="1..9",
                   help="range '1..9' or comma list '1,4,7' (default: 1..9)")
    p.add_argument("--window", required=True,
                   help="cue-relative window 'start_s:length_s', e.g. 0.5:4.0")
    p.add_argument("--include-eog", action="store_true",
                   help="keep the trailing EOG channels (default: drop them)")
    p.set_defaults(func=cmd_convert)
    return parser


def cmd_convert(args):
    try:
        spec = ConversionSpec(input_dir=Path(args.input_dir),
                              output_path=Path(args.out),
                              subjects=parse_subjects(args.subjects),
                              window=parse_window(args.window),
                              include_eog=args.include_eog)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        summary = convert(spec)
    except (ConversionError, GdfError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    total = 0
    for subject in sorted(summary):
        counts = summary[subject]
        line = " ".join(f"session{sess}={n}" for sess, n in sorted(counts.items()))
        print(f"subject {subject}: {line}")
        total += sum(counts.values())
    print(f"wrote {total} trials to {args.out}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
