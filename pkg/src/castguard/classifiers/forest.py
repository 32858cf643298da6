"""Random forest: bagged CART trees with per-split feature subsampling."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .base import TrainedModel
from .tree import DecisionTree


class RandomForestModel(TrainedModel):
    kind = "random_forest"

    def __init__(self, spec, input_dim: int, trees: list[DecisionTree]):
        super().__init__(spec, input_dim)
        self.trees = trees

    def _score(self, x: np.ndarray) -> np.ndarray:
        """Fraction of trees voting defect; a 0.5 leaf votes defect."""
        votes = np.stack([tree.predict_proba(x) >= 0.5 for tree in self.trees])
        return votes.mean(axis=0)


def fit_random_forest(spec, features: np.ndarray, labels: np.ndarray) -> RandomForestModel:
    n_trees = int(spec.params["n_trees"])
    if n_trees < 1:
        raise ValidationError(f"n_trees must be >= 1, got {n_trees}")
    bootstrap = bool(spec.params["bootstrap"])
    max_features = spec.params["max_features"]
    if max_features == "sqrt":
        max_features = int(np.ceil(np.sqrt(features.shape[1])))
    n = features.shape[0]
    seeds = np.random.SeedSequence(spec.seed).generate_state(2 * n_trees, dtype=np.uint64)
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng(seeds[2 * t])
        idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        tree = DecisionTree(max_features=max_features, seed=int(seeds[2 * t + 1]))
        tree.fit(features[idx], labels[idx])
        trees.append(tree)
    return RandomForestModel(spec, input_dim=features.shape[1], trees=trees)
