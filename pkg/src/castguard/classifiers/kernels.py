"""Kernel functions shared by the GP and kernel-SVM classifiers."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError


def rbf_kernel(x, y, sigma: float, squared: bool = True) -> float:
    """Radial basis function kernel between two vectors.

    The standard form exp(-||x-y||^2 / (2 sigma^2)) is the default;
    squared=False selects the non-squared distance variant some texts
    print.  Value is in (0, 1], equals 1 iff x == y, and is symmetric.
    """
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if xv.shape != yv.shape or xv.ndim != 1:
        raise ValidationError(f"kernel inputs must be equal-length vectors, got {xv.shape} vs {yv.shape}")
    if sigma <= 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")
    d2 = float(np.sum((xv - yv) ** 2))
    arg = d2 if squared else np.sqrt(d2)
    return float(np.exp(-arg / (2.0 * sigma**2)))


def rbf_gram(a: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    """Pairwise squared-form RBF kernel matrix between row sets a and b."""
    d2 = (
        np.sum(a**2, axis=1)[:, None]
        - 2.0 * a @ b.T
        + np.sum(b**2, axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)  # clamp negative rounding residue
    return np.exp(-d2 / (2.0 * sigma**2))


def median_pairwise_distance(x: np.ndarray, seed: int = 0, max_rows: int = 2000) -> float:
    """Median Euclidean distance over (a subsample of) the row pairs."""
    if x.shape[0] > max_rows:
        rng = np.random.default_rng(seed)
        x = x[rng.choice(x.shape[0], size=max_rows, replace=False)]
    d2 = (
        np.sum(x**2, axis=1)[:, None]
        - 2.0 * x @ x.T
        + np.sum(x**2, axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    upper = d2[np.triu_indices(x.shape[0], k=1)]
    med = float(np.median(np.sqrt(upper))) if upper.size else 0.0
    return med if med > 0 else 1.0
