"""Directory-to-FMX feature extraction through a frozen CNN backbone.

Images live under <image_root>/defect/ (label 1) and <image_root>/ok/
(label 0).  Each image is resized to the architecture's input size,
grayscale replicated to 3 channels, pushed through the frozen
convolutional stack, flattened, and written as one FMX row.  A manifest
JSON records provenance (architecture, input size, normalization, counts,
skipped files).
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .architectures import Architecture, build_backbone, get_architecture, preprocess
from .fmx import write_fmx

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}
LABEL_DIRS = (("defect", 1), ("ok", 0))


class FeatureCountMismatch(RuntimeError):
    """The flattened backbone output does not match the expected count."""


@dataclass(frozen=True)
class ExtractorSpec:
    architecture: str
    image_root: Path
    output_path: Path
    batch_size: int = 16
    input_size: int | None = None  # None: the architecture's default
    weights: str | None = "imagenet"  # None builds random (untrained) weights

    def resolved(self) -> tuple[Architecture, int]:
        arch = get_architecture(self.architecture)
        size = self.input_size if self.input_size is not None else arch.default_input_size
        if size < 32:
            raise ValueError(f"input size {size} is too small for these backbones")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        return arch, size


def list_labeled_images(image_root: Path) -> list[tuple[Path, int]]:
    """(path, label) pairs in a stable order: defect/ first, sorted names."""
    image_root = Path(image_root)
    pairs = []
    found_any_dir = False
    for sub, label in LABEL_DIRS:
        directory = image_root / sub
        if not directory.is_dir():
            continue
        found_any_dir = True
        for path in sorted(directory.iterdir()):
            if path.suffix.lower() in IMAGE_SUFFIXES:
                pairs.append((path, label))
    if not found_any_dir:
        raise FileNotFoundError(f"{image_root} has neither a defect/ nor an ok/ subdirectory")
    if not pairs:
        raise FileNotFoundError(f"no images found under {image_root}")
    return pairs


def load_image(path: Path, input_size: int) -> np.ndarray:
    """RGB float32 (size, size, 3); grayscale images get their channel replicated."""
    with Image.open(path) as img:
        img = img.convert("L") if img.mode in ("L", "I;16", "1") else img.convert("RGB")
        img = img.resize((input_size, input_size), Image.BILINEAR)
        arr = np.asarray(img, dtype=np.float32)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return arr


def extract_features(spec: ExtractorSpec) -> dict:
    """Run the extraction and write the FMX file plus its manifest.

    Returns the manifest dict.  Raises FeatureCountMismatch if the
    flattened output width disagrees with the architecture's expected
    count (wrong truncation point or incompatible input size).
    """
    arch, input_size = spec.resolved()
    pairs = list_labeled_images(spec.image_root)
    backbone = build_backbone(arch, input_size, weights=spec.weights)

    flat_width = int(np.prod(backbone.output_shape[1:]))
    if flat_width != arch.expected_features:
        raise FeatureCountMismatch(
            f"{arch.name} at input size {input_size} produces {flat_width} features, "
            f"expected {arch.expected_features}; pass the input size that matches the gate"
        )

    rows = []
    labels = []
    skipped = []
    batch_imgs: list[np.ndarray] = []
    batch_labels: list[int] = []

    def flush():
        if not batch_imgs:
            return
        stacked = preprocess(arch, np.stack(batch_imgs))
        out = backbone.predict(stacked, verbose=0)
        rows.append(out.reshape(out.shape[0], -1).astype(np.float32))
        labels.extend(batch_labels)
        batch_imgs.clear()
        batch_labels.clear()

    for path, label in pairs:
        try:
            batch_imgs.append(load_image(path, input_size))
        except (OSError, UnidentifiedImageError) as exc:
            print(f"warning: skipping unreadable image {path}: {exc}", file=sys.stderr)
            skipped.append(str(path))
            continue
        batch_labels.append(label)
        if len(batch_imgs) >= spec.batch_size:
            flush()
    flush()

    if not rows:
        raise FileNotFoundError(f"every image under {spec.image_root} was unreadable")
    features = np.vstack(rows)
    label_arr = np.asarray(labels, dtype=np.uint8)
    tag = f"{arch.name}@{input_size}"
    write_fmx(features, label_arr, tag, spec.output_path)

    manifest = {
        "architecture": arch.name,
        "input_size": input_size,
        "normalization": arch.preprocess_id,
        "weights": spec.weights or "random",
        "n_features": int(features.shape[1]),
        "n_images": int(features.shape[0]),
        "n_defect": int(label_arr.sum()),
        "n_ok": int((label_arr == 0).sum()),
        "skipped": skipped,
        "output": str(spec.output_path),
    }
    manifest_path = Path(spec.output_path).with_suffix(".manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
