"""dataset-generator: convert public dataset layouts or synthesize a scene."""

from __future__ import annotations

import argparse
import sys

from slamkit.ingest.common import IngestError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dataset-generator",
        description="Convert a dataset directory (or synthesize a scene) into a .slam datafile.",
    )
    parser.add_argument(
        "--format", required=True, choices=["tum", "icl-nuim", "euroc", "synthetic"]
    )
    parser.add_argument("--input", help="dataset root directory (tum/icl-nuim/euroc)")
    parser.add_argument("--config", help="key=value scene config file (synthetic)")
    parser.add_argument("--output", required=True, help="output .slam path")
    parser.add_argument(
        "--depth-scale", type=float, default=None,
        help="meters per raw depth unit (tum/icl-nuim, default 1/5000)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.format == "synthetic":
            if not args.config:
                print("--config is required for synthetic", file=sys.stderr)
                return 2
            from slamkit.ingest.synthetic import generate_synthetic, parse_synthetic_config

            summary = generate_synthetic(parse_synthetic_config(args.config), args.output)
        else:
            if not args.input:
                print("--input is required for dataset conversion", file=sys.stderr)
                return 2
            if args.format == "tum":
                from slamkit.ingest.tum import TUM_DEPTH_SCALE, convert_tum

                summary = convert_tum(
                    args.input, args.output,
                    depth_scale=args.depth_scale or TUM_DEPTH_SCALE,
                )
            elif args.format == "icl-nuim":
                from slamkit.ingest.icl_nuim import convert_icl_nuim
                from slamkit.ingest.tum import TUM_DEPTH_SCALE

                summary = convert_icl_nuim(
                    args.input, args.output,
                    depth_scale=args.depth_scale or TUM_DEPTH_SCALE,
                )
            else:
                from slamkit.ingest.euroc import convert_euroc

                summary = convert_euroc(args.input, args.output)
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(summary)
    for note in summary.notes:
        print(f"note: {note}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
