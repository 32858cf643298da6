"""Writer for the FMX feature-matrix interchange format.

This mirrors the format consumed by the castguard toolkit (little-endian):
magic ``FMX1``, version 0x01, u32 n_rows, u32 n_cols, u8 has_labels,
row-major binary32 payload, n_rows u8 labels, u16 tag length + UTF-8 tag.
"""

from __future__ import annotations

import struct

import numpy as np

FMX_MAGIC = b"FMX1"
FMX_VERSION = 1
_HEADER = struct.Struct("<4sBIIB")


def write_fmx(features: np.ndarray, labels: np.ndarray, source_tag: str, path) -> None:
    feats = np.ascontiguousarray(features, dtype="<f4")
    labs = np.asarray(labels, dtype=np.uint8)
    if feats.ndim != 2:
        raise ValueError(f"features must be 2-D, got shape {feats.shape}")
    if labs.shape != (feats.shape[0],):
        raise ValueError(f"labels shape {labs.shape} does not match {feats.shape[0]} rows")
    if not np.isfinite(feats).all():
        raise ValueError("features contain NaN or Inf")
    if not np.isin(labs, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    tag_bytes = source_tag.encode("utf-8")
    if len(tag_bytes) > 0xFFFF:
        raise ValueError("source_tag longer than 65535 bytes")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FMX_MAGIC, FMX_VERSION, feats.shape[0], feats.shape[1], 1))
        fh.write(feats.tobytes())
        fh.write(labs.tobytes())
        fh.write(struct.pack("<H", len(tag_bytes)))
        fh.write(tag_bytes)
