"""Command-line entry point: ``hybridseg <command> ...``.

Failures print a one-line JSON object ``{"error": <category>, "message": ...}``
to stderr and exit with status 1. Invalid parameter values are reported with
the category ``InvalidArgument``.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

from . import io, phantom
from .exceptions import SeedEroded, SegmentationError
from .metrics import compare
from .pipeline import bench_table, run_bench, run_segment


def _seed_point(text):
    try:
        point = tuple(int(c) for c in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be i,j,k integers, got {text!r}")
    if len(point) != 3:
        raise argparse.ArgumentTypeError(f"seed must have three coordinates, got {text!r}")
    return point


def cmd_segment(args):
    report = run_segment(
        args.volume, args.seed, header_path=args.header, config_path=args.config,
        out_prefix=args.out_prefix, truth_path=args.truth, truth_header_path=args.truth_header,
        label=args.label,
    )
    print(report.to_json())


def cmd_phantom(args):
    spec = phantom.PhantomSpec.from_json(Path(args.spec).read_text())
    volume, truth = phantom.generate(spec)
    io.write_volume(volume, f"{args.out_prefix}_volume.raw", dtype="f32")
    io.write_mask(truth, f"{args.out_prefix}_truth.raw")
    print(json.dumps({
        "volume": f"{args.out_prefix}_volume.raw",
        "truth": f"{args.out_prefix}_truth.raw",
        "seed_point": list(phantom.default_seed_point(spec)),
        "truth_voxels": int(truth.sum()),
    }))


def cmd_compare(args):
    a = io.read_mask(args.a, args.a_header)
    b = io.read_mask(args.b, args.b_header)
    print(compare(a, b).to_json())


def cmd_slices(args):
    volume, _ = io.read_volume(args.volume, args.header)
    mask = io.read_mask(args.mask, args.mask_header) if args.mask else None
    io.export_slice(volume, mask, args.axis, args.index, args.out)


def cmd_bench(args):
    spec = phantom.PhantomSpec.from_json(Path(args.spec).read_text())
    params, seed_options = io.read_config(args.config) if args.config else (None, {})
    reports = run_bench(spec, params, seed_options, seed_point=args.seed)
    table = bench_table(reports)
    out = Path(args.out)
    io.atomic_write(out, json.dumps([json.loads(r.to_json()) for r in reports], indent=2, sort_keys=True) + "\n")
    io.atomic_write(out.with_suffix(".txt"), table + "\n")
    print(table)


def build_parser():
    parser = argparse.ArgumentParser(prog="hybridseg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment a raw volume from a seed point")
    p.add_argument("--volume", required=True)
    p.add_argument("--header", help="JSON sidecar (default: volume path with .json)")
    p.add_argument("--seed", required=True, type=_seed_point, help="voxel index i,j,k")
    p.add_argument("--config", help="flat key = value parameter file")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--truth", help="ground-truth mask to score against")
    p.add_argument("--truth-header")
    p.add_argument("--label", default="structure")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("phantom", help="write a synthetic volume and its ground truth")
    p.add_argument("--spec", required=True, help="phantom spec JSON")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("compare", help="Dice and overlap between two masks")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--a-header")
    p.add_argument("--b-header")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("slices", help="export one slice as a PPM image")
    p.add_argument("--volume", required=True)
    p.add_argument("--header")
    p.add_argument("--mask")
    p.add_argument("--mask-header")
    p.add_argument("--axis", choices=sorted(io.AXES), default="z")
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_slices)

    p = sub.add_parser("bench", help="cluster seeding vs sphere seeding on a phantom")
    p.add_argument("--spec", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=_seed_point, help="override the phantom's default seed point")
    p.add_argument("--out", required=True, help="JSON table path; a .txt table is written alongside")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except SegmentationError as exc:
        payload = {"error": exc.category, "message": str(exc)}
        if isinstance(exc, SeedEroded):
            payload["step"] = exc.step
            payload["hint"] = "reduce erosion_steps in the config file"
        print(json.dumps(payload), file=sys.stderr)
        return 1
    except ValueError as exc:
        print(json.dumps({"error": "InvalidArgument", "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
