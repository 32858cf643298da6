"""Feature-matrix datasets: the FMX binary format, CSV ingest, splitting, synthesis.

FMX is the interchange format between the feature extractor and this
package.  Layout (little-endian throughout):

    bytes 0-3   magic ``FMX1``
    byte  4     version, currently 0x01
    bytes 5-8   u32 n_rows
    bytes 9-12  u32 n_cols
    byte  13    u8 has_labels (0 or 1)
    then        n_rows * n_cols IEEE-754 binary32 values, row-major
    then        n_rows u8 labels (present iff has_labels)
    then        u16 tag_length, then tag_length UTF-8 bytes of source_tag

The file must end exactly after the tag; anything else is corrupt.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, ValidationError

FMX_MAGIC = b"FMX1"
FMX_VERSION = 1
_HEADER = struct.Struct("<4sBIIB")


@dataclass(frozen=True)
class FeatureDataset:
    """Labeled feature matrix; rows are samples, columns are feature activations.

    Label 1 means defect (the positive class everywhere in this package),
    label 0 means non-defect.
    """

    features: np.ndarray
    labels: np.ndarray
    source_tag: str = ""

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float32)
        labs = np.asarray(self.labels, dtype=np.uint8)
        if feats.ndim != 2 or feats.shape[1] < 1:
            raise ValidationError(f"features must be a 2-D matrix with >= 1 column, got shape {feats.shape}")
        if labs.ndim != 1 or labs.shape[0] != feats.shape[0]:
            raise ValidationError(
                f"labels length {labs.shape} does not match {feats.shape[0]} feature rows"
            )
        if not np.isfinite(feats).all():
            raise ValidationError("features contain NaN or Inf")
        if labs.size and not np.isin(labs, (0, 1)).all():
            bad = labs[~np.isin(labs, (0, 1))][0]
            raise ValidationError(f"labels must be 0 or 1, found {bad}")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> tuple[int, int]:
        """(n_non_defect, n_defect)."""
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.75
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class SynthSpec:
    """Two isotropic Gaussian clusters, a desk-scale stand-in for CNN features."""

    n_per_class: int = 200
    dim: int = 20
    class_separation: float = 8.0
    noise_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_per_class < 1:
            raise ValidationError(f"n_per_class must be >= 1, got {self.n_per_class}")
        if self.dim < 2:
            raise ValidationError(f"dim must be >= 2, got {self.dim}")
        if self.class_separation < 0:
            raise ValidationError(f"class_separation must be >= 0, got {self.class_separation}")
        if self.noise_sigma <= 0:
            raise ValidationError(f"noise_sigma must be > 0, got {self.noise_sigma}")


def write_fmx(dataset: FeatureDataset, path) -> None:
    """Write a dataset to the FMX binary format (always with labels)."""
    tag_bytes = dataset.source_tag.encode("utf-8")
    if len(tag_bytes) > 0xFFFF:
        raise ValidationError(f"source_tag is {len(tag_bytes)} bytes, max is 65535")
    n_rows, n_cols = dataset.features.shape
    header = _HEADER.pack(FMX_MAGIC, FMX_VERSION, n_rows, n_cols, 1)
    payload = np.ascontiguousarray(dataset.features, dtype="<f4").tobytes()
    labels = dataset.labels.astype(np.uint8).tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
            fh.write(labels)
            fh.write(struct.pack("<H", len(tag_bytes)))
            fh.write(tag_bytes)
    except OSError as exc:
        raise DataFormatError(f"cannot write FMX file {path}: {exc}") from exc


def read_fmx(path) -> FeatureDataset:
    """Read an FMX file back into a dataset, verifying the layout byte-for-byte."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataFormatError(f"cannot read FMX file {path}: {exc}") from exc

    if len(blob) < _HEADER.size:
        raise DataFormatError(f"{path}: not an FMX file (too short for header)")
    magic, version, n_rows, n_cols, has_labels = _HEADER.unpack_from(blob, 0)
    if magic != FMX_MAGIC:
        raise DataFormatError(f"{path}: not an FMX file (magic {magic!r})")
    if version != FMX_VERSION:
        raise DataFormatError(f"{path}: unsupported FMX version {version}")
    if has_labels not in (0, 1):
        raise DataFormatError(f"{path}: has_labels byte must be 0 or 1, got {has_labels}")
    if has_labels == 0:
        # FeatureDataset invariants require labels; unlabeled files are
        # readable only by header inspection.
        raise DataFormatError(f"{path}: file carries no labels")

    offset = _HEADER.size
    payload_len = 4 * n_rows * n_cols
    if len(blob) < offset + payload_len + n_rows + 2:
        raise DataFormatError(f"{path}: truncated/corrupt (header claims {n_rows}x{n_cols})")
    features = np.frombuffer(blob, dtype="<f4", count=n_rows * n_cols, offset=offset)
    features = features.reshape(n_rows, n_cols).astype(np.float32)
    offset += payload_len
    labels = np.frombuffer(blob, dtype=np.uint8, count=n_rows, offset=offset)
    offset += n_rows
    (tag_len,) = struct.unpack_from("<H", blob, offset)
    offset += 2
    if len(blob) != offset + tag_len:
        raise DataFormatError(f"{path}: truncated/corrupt (trailing size mismatch)")
    tag = blob[offset : offset + tag_len].decode("utf-8")
    return FeatureDataset(features=features, labels=labels.copy(), source_tag=tag)


def inspect_fmx(path) -> dict:
    """Return FMX header fields without loading the payload."""
    try:
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
    except OSError as exc:
        raise DataFormatError(f"cannot read FMX file {path}: {exc}") from exc
    if len(head) < _HEADER.size:
        raise DataFormatError(f"{path}: not an FMX file (too short for header)")
    magic, version, n_rows, n_cols, has_labels = _HEADER.unpack(head)
    if magic != FMX_MAGIC:
        raise DataFormatError(f"{path}: not an FMX file (magic {magic!r})")
    return {
        "version": version,
        "n_rows": n_rows,
        "n_cols": n_cols,
        "has_labels": bool(has_labels),
        "payload_bytes": 4 * n_rows * n_cols,
    }


def read_csv(path, label_column: str) -> FeatureDataset:
    """Read an RFC-4180 style CSV (header required) into a dataset.

    The label column must contain only 0/1; all other columns are parsed
    as features in their original order.
    """
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read CSV file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty CSV, header row required") from None
        if label_column not in header:
            raise DataFormatError(f"{path}: no column named {label_column!r} in header")
        label_idx = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != label_idx]

        rows: list[list[float]] = []
        labels: list[int] = []
        for row_no, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}: row {row_no} has {len(row)} cells, header has {len(header)}"
                )
            feats = []
            for col_idx, cell in enumerate(row):
                if col_idx == label_idx:
                    if cell.strip() not in ("0", "1"):
                        raise ValidationError(
                            f"{path}: row {row_no} label {cell!r} is not 0 or 1"
                        )
                    labels.append(int(cell))
                    continue
                try:
                    feats.append(float(cell))
                except ValueError:
                    raise DataFormatError(
                        f"{path}: row {row_no}, column {header[col_idx]!r}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
            rows.append(feats)
    if not rows:
        raise DataFormatError(f"{path}: CSV has a header but no data rows")
    features = np.asarray(rows, dtype=np.float32)
    tag = "csv:" + ",".join(feature_names)
    return FeatureDataset(features=features, labels=np.asarray(labels, dtype=np.uint8), source_tag=tag)


def _train_count(fraction: float, n: int) -> int:
    # round-half-up on the train side; remainder goes to test
    return int(np.floor(fraction * n + 0.5))


def split_dataset(dataset: FeatureDataset, spec: SplitSpec) -> tuple[FeatureDataset, FeatureDataset]:
    """Split into train/test, stratified per class by default.

    The same seed always produces the same index partition.
    """
    rng = np.random.default_rng(spec.seed)
    n = dataset.n_samples
    if spec.stratified:
        train_idx_parts = []
        test_idx_parts = []
        for cls in (0, 1):
            cls_idx = np.flatnonzero(dataset.labels == cls)
            if cls_idx.size < 2:
                raise ValidationError(
                    f"stratified split needs >= 2 samples per class, class {cls} has {cls_idx.size}"
                )
            perm = rng.permutation(cls_idx)
            k = _train_count(spec.train_fraction, cls_idx.size)
            train_idx_parts.append(perm[:k])
            test_idx_parts.append(perm[k:])
        train_idx = np.sort(np.concatenate(train_idx_parts))
        test_idx = np.sort(np.concatenate(test_idx_parts))
    else:
        perm = rng.permutation(n)
        k = _train_count(spec.train_fraction, n)
        train_idx = np.sort(perm[:k])
        test_idx = np.sort(perm[k:])

    def take(idx: np.ndarray) -> FeatureDataset:
        return FeatureDataset(
            features=dataset.features[idx],
            labels=dataset.labels[idx],
            source_tag=dataset.source_tag,
        )

    return take(train_idx), take(test_idx)


def gen_synth(spec: SynthSpec) -> FeatureDataset:
    """Generate two isotropic Gaussian clusters separated along a seeded random direction.

    Class 1 (defect) sits at +separation/2 along the direction, class 0 at
    -separation/2.  Deterministic given the seed.
    """
    rng = np.random.default_rng(spec.seed)
    direction = rng.standard_normal(spec.dim)
    direction /= np.linalg.norm(direction)
    offset = 0.5 * spec.class_separation * direction
    x0 = -offset + spec.noise_sigma * rng.standard_normal((spec.n_per_class, spec.dim))
    x1 = offset + spec.noise_sigma * rng.standard_normal((spec.n_per_class, spec.dim))
    features = np.vstack([x0, x1]).astype(np.float32)
    labels = np.concatenate(
        [np.zeros(spec.n_per_class, dtype=np.uint8), np.ones(spec.n_per_class, dtype=np.uint8)]
    )
    tag = (
        f"synth:n={spec.n_per_class},dim={spec.dim},sep={spec.class_separation},"
        f"sigma={spec.noise_sigma},seed={spec.seed}"
    )
    return FeatureDataset(features=features, labels=labels, source_tag=tag)
