"""CART decision tree with Gini impurity, the base learner for the forest."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError


def gini_impurity(labels) -> float:
    """1 - p0^2 - p1^2 over a nonempty label multiset; 0 for pure, 0.5 at 50/50."""
    y = np.asarray(labels)
    if y.size == 0:
        raise ValidationError("gini impurity of an empty node is undefined")
    p1 = float(np.mean(y == 1))
    return 1.0 - (1.0 - p1) ** 2 - p1**2


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "p_defect")

    def __init__(self, p_defect, feature=-1, threshold=0.0, left=None, right=None):
        self.p_defect = p_defect
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _best_split(x: np.ndarray, y: np.ndarray, feature_ids: np.ndarray):
    """Lowest weighted-Gini (feature, threshold) over midpoint candidates, or None."""
    n = y.shape[0]
    total_pos = float(np.sum(y))
    best = None  # (impurity, feature, threshold)
    for f in feature_ids:
        values = x[:, f]
        order = np.argsort(values, kind="stable")
        sv = values[order]
        sy = y[order]
        cum_pos = np.cumsum(sy)
        left_n = np.arange(1, n)
        boundary = sv[:-1] < sv[1:]  # split only between distinct values
        if not boundary.any():
            continue
        lp = cum_pos[:-1]
        rn = n - left_n
        rp = total_pos - lp
        gini_l = 1.0 - (lp / left_n) ** 2 - (1.0 - lp / left_n) ** 2
        gini_r = 1.0 - (rp / rn) ** 2 - (1.0 - rp / rn) ** 2
        weighted = (left_n * gini_l + rn * gini_r) / n
        weighted[~boundary] = np.inf
        idx = int(np.argmin(weighted))
        if best is None or weighted[idx] < best[0] - 1e-15:
            best = (float(weighted[idx]), int(f), float(0.5 * (sv[idx] + sv[idx + 1])))
    if best is None:
        return None
    return best[1], best[2]


class DecisionTree:
    """Binary CART classifier; leaves store the defect fraction.

    max_features limits the per-split candidate features (sampled with the
    tree's rng); None considers every feature, which makes the tree fully
    deterministic given the data.
    """

    def __init__(self, max_depth=None, min_leaf: int = 1, max_features=None, seed: int = 0):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.seed = seed
        self.root: _Node | None = None

    def fit(self, features: np.ndarray, labels: np.ndarray) -> "DecisionTree":
        x = np.asarray(features, dtype=np.float64)
        y = np.asarray(labels, dtype=np.float64)
        rng = np.random.default_rng(self.seed)
        self.n_features = x.shape[1]
        self.root = self._grow(x, y, depth=0, rng=rng)
        return self

    def _grow(self, x, y, depth, rng) -> _Node:
        p_defect = float(np.mean(y))
        node = _Node(p_defect)
        if (
            p_defect in (0.0, 1.0)
            or y.shape[0] < 2 * self.min_leaf
            or (self.max_depth is not None and depth >= self.max_depth)
        ):
            return node
        if self.max_features is None or self.max_features >= self.n_features:
            feature_ids = np.arange(self.n_features)
        else:
            feature_ids = rng.choice(self.n_features, size=self.max_features, replace=False)
        split = _best_split(x, y, feature_ids)
        if split is None:
            return node
        f, thr = split
        mask = x[:, f] < thr
        if mask.sum() < self.min_leaf or (~mask).sum() < self.min_leaf:
            return node
        node.feature = f
        node.threshold = thr
        node.left = self._grow(x[mask], y[mask], depth + 1, rng)
        node.right = self._grow(x[~mask], y[~mask], depth + 1, rng)
        return node

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        """Per-row defect fraction of the reached leaf."""
        x = np.asarray(features, dtype=np.float64)
        out = np.empty(x.shape[0])
        for i, row in enumerate(x):
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] < node.threshold else node.right
            out[i] = node.p_defect
        return out

    def predict(self, features: np.ndarray) -> np.ndarray:
        return (self.predict_proba(features) >= 0.5).astype(np.uint8)
