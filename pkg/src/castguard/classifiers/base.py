"""Shared fit/predict/score contract for all classifier kinds.

Every trained model is immutable after fit.  predict returns labels in
{0, 1}; score returns a real vector where higher always means stronger
defect preference.  Probabilistic kinds score P(defect) and decide at
0.5, margin kinds score a signed margin and decide at 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError, ValidationError


def check_features(features, expected_dim: int | None = None) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValidationError(f"features must be a matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValidationError("features contain NaN or Inf")
    if expected_dim is not None and x.shape[1] != expected_dim:
        raise ValidationError(
            f"dimension mismatch: model expects {expected_dim} features, got {x.shape[1]}"
        )
    return x


def require_both_classes(labels: np.ndarray, kind: str) -> None:
    if np.unique(labels).size < 2:
        raise TrainingError(f"degenerate training set for {kind}: only one class present")


@dataclass(frozen=True)
class Standardizer:
    """Per-feature zero-mean unit-variance transform, statistics from the training set."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "Standardizer":
        x = np.asarray(features, dtype=np.float64)
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)  # constant features pass through
        return cls(mean=mean, scale=scale)

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.scale


class TrainedModel:
    """Base class; subclasses implement _predict/_score on validated matrices."""

    kind: str = ""
    decision_threshold: float = 0.5  # probabilistic default; margin kinds use 0.0

    def __init__(self, spec, input_dim: int):
        self.spec = spec
        self.input_dim = input_dim

    def score(self, features) -> np.ndarray:
        x = check_features(features, self.input_dim)
        return self._score(x)

    def predict(self, features) -> np.ndarray:
        scores = self.score(features)
        return (scores >= self.decision_threshold).astype(np.uint8)

    def _score(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError
