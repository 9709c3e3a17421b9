"""Command-line entry point: extract keypoint sequences from indexed videos."""

import argparse
import json
import logging
import sys

from .backends import BackendUnavailableError, get_backend
from .extract import extract_corpus


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kpextract",
        description="Extract per-frame keypoint sequences from a video corpus "
        "into a manifest.json + data.jsonl dataset.",
    )
    parser.add_argument("--index", required=True, help="corpus index CSV (video_path,id,label,split)")
    parser.add_argument("--out", required=True, help="output dataset directory")
    parser.add_argument(
        "--backend",
        default="marker",
        choices=("marker", "mediapipe"),
        help="keypoint detector (default: marker)",
    )
    parser.add_argument("--stride", type=int, default=1, help="keep every Nth frame (default: 1)")
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        backend = get_backend(args.backend)
    except (ValueError, BackendUnavailableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        summary = extract_corpus(args.index, args.out, backend, stride=args.stride)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    finally:
        backend.close()
    print(json.dumps(summary, indent=2))
    return 0 if summary["extracted"] > 0 else 1


if __name__ == "__main__":
    sys.exit(main())
