"""Command-line entry point: ``camkit-export --preset ... --out DIR``."""

import argparse
import sys

PRESET_CHOICES = ("tiny-vgg", "linear-head", "relu-head")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="camkit-export",
        description="Export a torch-built fixture model, samples, and manifest in camkit's neutral format.",
    )
    parser.add_argument("--preset", required=True, choices=PRESET_CHOICES)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--train", action="store_true", help="fit the preset briefly on procedural images")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--samples", type=int, default=4, help="number of samples to export")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        from . import export
    except ImportError as e:
        print(f"error: the exporter needs PyTorch installed ({e})", file=sys.stderr)
        return 1
    try:
        manifest = export.export_model(
            args.preset, args.seed, train=args.train, out_dir=args.out, num_samples=args.samples
        )
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"exported {args.preset} (seed {args.seed}) to {args.out}: {len(manifest['files'])} files")
    return 0


if __name__ == "__main__":
    sys.exit(main())
