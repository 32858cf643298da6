"""Command line for the feature extractor.

TF_ENABLE_ONEDNN_OPTS is pinned off before TensorFlow loads so repeated
extractions produce byte-identical payloads (oneDNN may reorder float
reductions between runs).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="castguard-extract",
        description="Extract frozen-CNN features from casting images into an FMX file.",
    )
    parser.add_argument("--arch", required=True, help="VGG16, ResNet50, DenseNet121, or InceptionResNetV2")
    parser.add_argument("--images", required=True, help="directory holding defect/ and ok/ subdirectories")
    parser.add_argument("--out", required=True, help="output .fmx path")
    parser.add_argument("--batch", type=int, default=16)
    parser.add_argument("--input-size", type=int, default=None, help="override the architecture's input size")
    parser.add_argument(
        "--random-weights",
        action="store_true",
        help="skip the ImageNet weight download and use a random frozen backbone (smoke runs only)",
    )
    return parser


def main(argv=None) -> int:
    os.environ.setdefault("TF_ENABLE_ONEDNN_OPTS", "0")
    os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "2")
    args = build_parser().parse_args(argv)

    from .extract import ExtractorSpec, FeatureCountMismatch, extract_features

    spec = ExtractorSpec(
        architecture=args.arch,
        image_root=Path(args.images),
        output_path=Path(args.out),
        batch_size=args.batch,
        input_size=args.input_size,
        weights=None if args.random_weights else "imagenet",
    )
    try:
        manifest = extract_features(spec)
    except FeatureCountMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"wrote {manifest['n_images']} x {manifest['n_features']} features "
        f"({manifest['n_defect']} defect / {manifest['n_ok']} ok) to {manifest['output']}"
    )
    if manifest["skipped"]:
        print(f"skipped {len(manifest['skipped'])} unreadable images (see manifest)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
