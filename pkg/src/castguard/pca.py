"""Principal component analysis for projecting high-dimensional features.

Works on the smaller side of the centered data matrix: for n samples in
p dimensions it eigendecomposes the n x n Gram matrix when n <= p and
the p x p covariance otherwise, so feature dimensions in the 100k range
never materialize a p x p matrix.  Components carry a deterministic sign
(largest-magnitude coordinate positive) so repeated fits are identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (p,)
    components: np.ndarray  # (q, p), orthonormal rows
    explained_variances: np.ndarray  # (q,), non-increasing

    @property
    def q(self) -> int:
        return self.components.shape[0]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    out = components.copy()
    for i in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[i])))
        if out[i, j] < 0:
            out[i] = -out[i]
    return out


def pca_fit(data, q: int) -> PcaModel:
    """Top-q principal directions of the centered data.

    q must satisfy q <= min(n - 1, p); all-identical data has no variance
    to explain and is rejected.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"data must be a matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValidationError("data contains NaN or Inf")
    n, p = x.shape
    if not 1 <= q <= min(n - 1, p):
        raise ValidationError(f"q={q} must be in [1, min(n-1, p)] = [1, {min(n - 1, p)}]")
    mean = x.mean(axis=0)
    centered = x - mean

    if n <= p:
        small = centered @ centered.T  # n x n Gram matrix
        scale = float(n - 1)
    else:
        small = centered.T @ centered  # p x p scatter matrix
        scale = float(n - 1)
    eigvals, eigvecs = np.linalg.eigh(small)  # ascending
    order = np.argsort(eigvals, kind="stable")[::-1][:q]
    top_vals = eigvals[order]
    if top_vals[0] <= 0:
        raise ValidationError("zero-variance data: nothing to project")
    floor = top_vals[0] * 1e-12
    if (top_vals < floor).any():
        rank = int(np.sum(eigvals > floor))
        raise ValidationError(f"data rank {rank} is below the requested q={q}")
    if n <= p:
        # right singular vectors from the Gram eigenvectors
        components = (centered.T @ eigvecs[:, order] / np.sqrt(top_vals)).T
    else:
        components = eigvecs[:, order].T
    variances = top_vals / scale

    return PcaModel(
        mean=mean,
        components=_fix_signs(np.ascontiguousarray(components)),
        explained_variances=np.ascontiguousarray(variances),
    )


def pca_transform(model: PcaModel, data) -> np.ndarray:
    """Project rows onto the components: (data - mean) @ components^T."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.mean.shape[0]:
        raise ValidationError(
            f"dimension mismatch: model expects {model.mean.shape[0]} features, got shape {x.shape}"
        )
    return (x - model.mean) @ model.components.T
