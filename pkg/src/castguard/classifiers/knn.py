"""K-nearest-neighbors with Euclidean distance and vote-fraction scores."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .base import TrainedModel

# Applied only on an exact vote tie: the single nearest neighbor nudges
# the score to its own side without leaving [0, 1] by more than 1e-6.
_TIE_BIAS = 1e-6


def knn_distances(query, features: np.ndarray, k: int) -> list[tuple[int, float]]:
    """The k nearest training rows to the query, as (index, distance) pairs.

    Sorted ascending by Euclidean distance; exact distance ties are broken
    by the lower row index.
    """
    q = np.asarray(query, dtype=np.float64)
    x = np.asarray(features, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != x.shape[1]:
        raise ValidationError(f"query dim {q.shape} does not match feature dim {x.shape[1]}")
    if not 1 <= k <= x.shape[0]:
        raise ValidationError(f"k={k} must be in [1, {x.shape[0]}]")
    dists = np.sqrt(np.sum((x - q) ** 2, axis=1))
    order = np.argsort(dists, kind="stable")[:k]
    return [(int(i), float(dists[i])) for i in order]


class KnnModel(TrainedModel):
    kind = "knn"

    def __init__(self, spec, features: np.ndarray, labels: np.ndarray, k: int):
        super().__init__(spec, input_dim=features.shape[1])
        self.features = features
        self.labels = labels
        self.k = k

    def _score(self, x: np.ndarray) -> np.ndarray:
        if self.k > self.features.shape[0]:
            raise ValidationError(
                f"k={self.k} exceeds the {self.features.shape[0]} stored training rows"
            )
        scores = np.empty(x.shape[0])
        # chunked brute force keeps the distance matrix small at high dims
        chunk = max(1, int(2**22 // max(1, self.features.shape[0])))
        for start in range(0, x.shape[0], chunk):
            block = x[start : start + chunk]
            d2 = (
                np.sum(block**2, axis=1)[:, None]
                - 2.0 * block @ self.features.T
                + np.sum(self.features**2, axis=1)[None, :]
            )
            # argsort on squared distances keeps the ascending order and
            # the lower-index tie rule of knn_distances
            order = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
            votes = self.labels[order].mean(axis=1)
            nearest = self.labels[order[:, 0]]
            tied = votes == 0.5
            votes[tied] += np.where(nearest[tied] == 1, _TIE_BIAS, -_TIE_BIAS)
            scores[start : start + block.shape[0]] = votes
        return scores


def fit_knn(spec, features: np.ndarray, labels: np.ndarray) -> KnnModel:
    k = int(spec.params["k"])
    if not 1 <= k <= features.shape[0]:
        raise ValidationError(f"k={k} must be in [1, {features.shape[0]}]")
    return KnnModel(spec, features=features.copy(), labels=labels.astype(np.float64), k=k)
